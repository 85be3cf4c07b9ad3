#pragma once

// Umbrella header: the full toolkit minus the CLI layer.

#include "raqam/acoustic.hpp"
#include "raqam/audio.hpp"
#include "raqam/corpus.hpp"
#include "raqam/decoder.hpp"
#include "raqam/errors.hpp"
#include "raqam/eval.hpp"
#include "raqam/frontend.hpp"
#include "raqam/graph.hpp"
#include "raqam/hmm.hpp"
#include "raqam/linguist.hpp"
#include "raqam/parallel.hpp"
#include "raqam/rng.hpp"
#include "raqam/vq.hpp"
