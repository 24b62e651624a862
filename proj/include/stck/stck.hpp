#pragma once

// Umbrella header for the short-text clustering toolkit.

#include "stck/corpus.hpp"
#include "stck/stopwords.hpp"
#include "stck/vectorize.hpp"
#include "stck/similarity.hpp"
#include "stck/clustering.hpp"
#include "stck/learners.hpp"
#include "stck/enhance.hpp"
#include "stck/evaluate.hpp"
#include "stck/synthetic.hpp"
#include "stck/harness.hpp"
