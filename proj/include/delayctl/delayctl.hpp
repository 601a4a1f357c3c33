// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/grid.hpp"
#include "delayctl/core/kernel.hpp"
#include "delayctl/core/numerics.hpp"
#include "delayctl/core/problem.hpp"
#include "delayctl/core/sampling.hpp"
#include "delayctl/hjb/arithmetic.hpp"
#include "delayctl/hjb/diagnostics.hpp"
#include "delayctl/hjb/feedback.hpp"
#include "delayctl/hjb/hamiltonian.hpp"
#include "delayctl/hjb/lag_chain.hpp"
#include "delayctl/hjb/probes.hpp"
#include "delayctl/hjb/solver.hpp"
#include "delayctl/hjb/value_field.hpp"
#include "delayctl/io/csv.hpp"
#include "delayctl/io/grid_spec.hpp"
#include "delayctl/io/manifest.hpp"
#include "delayctl/io/spec_file.hpp"
#include "delayctl/io/svg.hpp"
#include "delayctl/lift/equivalence.hpp"
#include "delayctl/lift/mild.hpp"
#include "delayctl/lift/probes.hpp"
#include "delayctl/models/advertising.hpp"
#include "delayctl/models/affine.hpp"
#include "delayctl/models/audit.hpp"
#include "delayctl/models/merton.hpp"
#include "delayctl/operators/lifted_ops.hpp"
#include "delayctl/operators/spectral.hpp"
#include "delayctl/sdde/brownian.hpp"
#include "delayctl/sdde/control.hpp"
#include "delayctl/sdde/cost.hpp"
#include "delayctl/sdde/simulate.hpp"
