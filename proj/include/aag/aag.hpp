#pragma once

#include "aag/algo/components.hpp"
#include "aag/algo/cycles.hpp"
#include "aag/algo/flows.hpp"
#include "aag/algo/pagerank.hpp"
#include "aag/algo/traversal.hpp"
#include "aag/coordinator/mock.hpp"
#include "aag/graph/csr.hpp"
#include "aag/graph/derive_schema.hpp"
#include "aag/graph/property_graph.hpp"
#include "aag/graph/source.hpp"
#include "aag/kb/kb_build.hpp"
#include "aag/kb/knowledge_base.hpp"
#include "aag/pipeline/datagen.hpp"
#include "aag/pipeline/failure_bench.hpp"
#include "aag/pipeline/run.hpp"
#include "aag/planner/planner.hpp"
#include "aag/tools/builtin.hpp"
#include "aag/tools/distill.hpp"
#include "aag/tools/rpc_server.hpp"
