#ifndef NOISEVEC_NOISEVEC_HPP
#define NOISEVEC_NOISEVEC_HPP

#include "noisevec/common.hpp"
#include "noisevec/corpus.hpp"
#include "noisevec/estimators.hpp"
#include "noisevec/eval.hpp"
#include "noisevec/features.hpp"
#include "noisevec/map_model.hpp"
#include "noisevec/sad.hpp"
#include "noisevec/synth.hpp"
#include "noisevec/transform.hpp"

#endif  // NOISEVEC_NOISEVEC_HPP
