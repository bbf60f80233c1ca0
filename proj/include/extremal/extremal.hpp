// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "extremal/datagen.hpp"
#include "extremal/exactdist.hpp"
#include "extremal/gof.hpp"
#include "extremal/kernels.hpp"
#include "extremal/matrix.hpp"
#include "extremal/parallel.hpp"
#include "extremal/pointproc.hpp"
#include "extremal/prmref.hpp"
#include "extremal/rng.hpp"
#include "extremal/scaling.hpp"
