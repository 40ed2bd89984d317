#pragma once

// File formats used by the command-line tool.
//
// Ids in every input file and in every report are offset by the run's index
// base (0 by default, 1 for one-based data). JSON inputs:
//   annotation  {"mode": "scribble_fg" | "scribble_fg_bg" | "bounding_box",
//                "ids": [...], "labels": [...]}
//   scribbles   [{"image": k, "fg": [...], "bg": [...]}, ...]
//   instance    {"color": F, "sift": F, "hog": F, "adjacency": F,
//                "objectness": F (optional)}
//   batch       {"features": F, "labels": F}
//   rankings    [{"query": q, "ids": [...], "scores": [...] (optional)}, ...]
// where F is a matrix or list file path relative to the JSON file.

#include <filesystem>
#include <string>
#include <vector>

#include "cdskit/dcds.hpp"
#include "cdskit/metrics.hpp"
#include "cdskit/segmentation.hpp"
#include "json.hpp"

namespace cdskit::app {

using Json = nlohmann::ordered_json;

struct KeyValue {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// key=value lines; '#' and ';' start comments, blank lines are skipped.
std::vector<KeyValue> read_key_value_file(const std::filesystem::path& path);

/// Parses "3,5,8" (whitespace allowed) into zero-based ids.
std::vector<Index> parse_id_list(const std::string& text, Index base, const std::string& what);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& value);

Annotation read_annotation(const std::filesystem::path& path, Index base);
std::vector<Scribbles> read_scribbles(const std::filesystem::path& path, Index base);
CosegImage read_coseg_instance(const std::filesystem::path& path);
MiniBatch read_batch(const std::filesystem::path& path);
std::vector<RankedList> read_rankings(const std::filesystem::path& path, Index base);

/// Ids read from an integer list file, shifted to zero-based.
std::vector<Index> read_id_file(const std::filesystem::path& path, Index base);
std::vector<long> read_labels(const std::filesystem::path& path);

Json ids_to_json(const std::vector<Index>& ids, Index base);
Json ranking_to_json(const RankedList& list, Index base, std::size_t top = 0);

}  // namespace cdskit::app
