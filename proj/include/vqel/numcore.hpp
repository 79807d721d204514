#pragma once

#include "vqel/numcore/adam.hpp"
#include "vqel/numcore/ops.hpp"
#include "vqel/numcore/tensor.hpp"
