#pragma once

#include "nidtm/corpus.hpp"
#include "nidtm/error.hpp"
#include "nidtm/evaluation.hpp"
#include "nidtm/levy_exponent.hpp"
#include "nidtm/mcmc.hpp"
#include "nidtm/moments.hpp"
#include "nidtm/nid_distribution.hpp"
#include "nidtm/parallel.hpp"
#include "nidtm/quadrature.hpp"
#include "nidtm/spectral.hpp"
#include "nidtm/synth.hpp"
#include "nidtm/tensor.hpp"
#include "nidtm/tuner.hpp"
#include "nidtm/weights.hpp"
