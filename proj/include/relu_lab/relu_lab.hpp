#pragma once

#include "relu_lab/common.hpp"
#include "relu_lab/text_io.hpp"
#include "relu_lab/dataset.hpp"
#include "relu_lab/yardstick.hpp"
#include "relu_lab/network.hpp"
#include "relu_lab/phases.hpp"
#include "relu_lab/interpolator.hpp"
#include "relu_lab/experiments.hpp"
#include "relu_lab/acceptance.hpp"
