#pragma once

#include "reid/augment.hpp"
#include "reid/errors.hpp"
#include "reid/eval.hpp"
#include "reid/geometry.hpp"
#include "reid/harness.hpp"
#include "reid/losses.hpp"
#include "reid/mining.hpp"
#include "reid/rerank.hpp"
#include "reid/rng.hpp"
#include "reid/tensorio.hpp"
