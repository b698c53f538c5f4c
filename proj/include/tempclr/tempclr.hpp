#pragma once

#include "tempclr/align.hpp"
#include "tempclr/eval.hpp"
#include "tempclr/loss.hpp"
#include "tempclr/matrix.hpp"
#include "tempclr/model.hpp"
#include "tempclr/negatives.hpp"
#include "tempclr/seqcore.hpp"
#include "tempclr/synth.hpp"
#include "tempclr/train.hpp"
