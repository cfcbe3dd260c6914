#pragma once

// Layered-graph entity recommendation toolkit: random-walk corpora over a
// multi-layer link graph, skip-gram negative-sampling embeddings, kNN
// candidate generation, and a pairwise gradient-boosted-tree ranker.

#include "lgrec/candidates.hpp"
#include "lgrec/common.hpp"
#include "lgrec/config.hpp"
#include "lgrec/corpus.hpp"
#include "lgrec/embedding.hpp"
#include "lgrec/entity_table.hpp"
#include "lgrec/eval.hpp"
#include "lgrec/graph.hpp"
#include "lgrec/pipeline.hpp"
#include "lgrec/ranker.hpp"
#include "lgrec/synth.hpp"
#include "lgrec/tsv.hpp"
#include "lgrec/walks.hpp"
