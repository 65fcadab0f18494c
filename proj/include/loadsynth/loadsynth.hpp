#pragma once

#include "cluster.hpp"
#include "config.hpp"
#include "error.hpp"
#include "hmmc.hpp"
#include "ingest.hpp"
#include "markov.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "quantizer.hpp"
#include "rng.hpp"
#include "segment.hpp"
#include "serialize.hpp"
#include "sha256.hpp"
#include "timestamp.hpp"
#include "user_model.hpp"
