#pragma once

#include "fpp/autodiff.hpp"
#include "fpp/checkpoint.hpp"
#include "fpp/date.hpp"
#include "fpp/error.hpp"
#include "fpp/evaluation.hpp"
#include "fpp/fppg.hpp"
#include "fpp/gradcheck.hpp"
#include "fpp/grid.hpp"
#include "fpp/kernels.hpp"
#include "fpp/network.hpp"
#include "fpp/normalize.hpp"
#include "fpp/optim.hpp"
#include "fpp/postprocess.hpp"
#include "fpp/regrid.hpp"
#include "fpp/rng.hpp"
#include "fpp/split.hpp"
#include "fpp/synth.hpp"
#include "fpp/tensor.hpp"
#include "fpp/train.hpp"
#include "fpp/version.hpp"
