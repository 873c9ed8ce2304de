#pragma once

#include "rae/aeset.hpp"
#include "rae/autoencoder.hpp"
#include "rae/corpus.hpp"
#include "rae/errors.hpp"
#include "rae/eval.hpp"
#include "rae/image.hpp"
#include "rae/parallel.hpp"
#include "rae/pgm.hpp"
#include "rae/rng.hpp"
#include "rae/scoring.hpp"
#include "rae/serialize.hpp"
#include "rae/stats.hpp"
#include "rae/synthetic.hpp"
#include "rae/trainer.hpp"
