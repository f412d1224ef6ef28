// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header for the layer library.

#pragma once

#include "seqlayers/combinators.hpp"
#include "seqlayers/config.hpp"
#include "seqlayers/io.hpp"
#include "seqlayers/layer.hpp"
#include "seqlayers/layers/activations.hpp"
#include "seqlayers/layers/attention.hpp"
#include "seqlayers/layers/basic.hpp"
#include "seqlayers/layers/conditioning.hpp"
#include "seqlayers/layers/convolution.hpp"
#include "seqlayers/layers/dropout.hpp"
#include "seqlayers/layers/dsp.hpp"
#include "seqlayers/layers/normalization.hpp"
#include "seqlayers/layers/pooling.hpp"
#include "seqlayers/layers/recurrent.hpp"
#include "seqlayers/layers/resampling.hpp"
#include "seqlayers/layers/shape.hpp"
