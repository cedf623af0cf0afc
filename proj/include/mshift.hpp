// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <mshift/batched_factor.hpp>
#include <mshift/core.hpp>
#include <mshift/dense.hpp>
#include <mshift/flops.hpp>
#include <mshift/givens_schedule.hpp>
#include <mshift/hessenberg.hpp>
#include <mshift/irka.hpp>
#include <mshift/random_system.hpp>
#include <mshift/shifted_solve.hpp>
#include <mshift/small_eig.hpp>
#include <mshift/transforms.hpp>
#include <mshift/worker_pool.hpp>
