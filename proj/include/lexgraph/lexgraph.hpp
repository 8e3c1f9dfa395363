#pragma once

// Engine umbrella header. The HTTP frontend (http_service.hpp) is separate so
// engine users do not pull in cpp-httplib.

#include "lexgraph/corpus.hpp"
#include "lexgraph/corpus_io.hpp"
#include "lexgraph/error.hpp"
#include "lexgraph/evaluation.hpp"
#include "lexgraph/expansion.hpp"
#include "lexgraph/graph_export.hpp"
#include "lexgraph/search.hpp"
#include "lexgraph/session_json.hpp"
#include "lexgraph/session_store.hpp"
#include "lexgraph/snippets.hpp"
#include "lexgraph/vector_math.hpp"
