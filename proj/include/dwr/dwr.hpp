#pragma once

#include <dwr/numerics.hpp>
#include <dwr/perturbation.hpp>
#include <dwr/pade.hpp>
#include <dwr/roots.hpp>
#include <dwr/quadrature.hpp>
#include <dwr/borel.hpp>
#include <dwr/fock.hpp>
#include <dwr/instanton.hpp>
#include <dwr/analysis.hpp>
#include <dwr/pipeline.hpp>
