#pragma once

#include <filesystem>
#include <string>

#include "graphbd/graph.hpp"

namespace graphbd {

// TU Dortmund text format. The directory must contain <name>_A.txt
// (1-indexed "u, v" arcs), <name>_graph_indicator.txt and
// <name>_graph_labels.txt; <name>_node_labels.txt is optional. <name>
// defaults to the directory's basename.
//
// Arcs listed in both directions collapse to one undirected edge. Node
// features are the one-hot encoding of node labels, or a constant scalar 1
// when the dataset has no node labels. Graph labels are remapped to
// contiguous 0-based indices preserving their numeric order.
GraphDataset load_tu_dataset(const std::filesystem::path& directory,
                             const std::string& name = "");

// Writes the dataset back in the same format (arcs in both directions).
void save_tu_dataset(const GraphDataset& ds, const std::filesystem::path& directory);

struct CitationLoadStats {
  int dropped_edges = 0;  // edges citing ids absent from .content
};

// Citation format: <name>.content rows are "id f_1 ... f_d class", whitespace
// separated; <name>.cites rows are "id id". Node ids keep their .content file
// order; class strings map to indices sorted lexicographically; edges citing
// unknown ids are dropped and counted. Masks are left empty (all false) for
// split_node_dataset to fill.
NodeTaskDataset load_citation_dataset(const std::filesystem::path& directory,
                                      const std::string& name = "",
                                      CitationLoadStats* stats = nullptr);

}  // namespace graphbd
