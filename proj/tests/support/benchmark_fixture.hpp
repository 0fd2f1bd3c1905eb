#pragma once

// A synthetic stand-in for the full ImageNet segmentation benchmark: 1000
// classes, eight of them excluded, with task groups and a manifest whose
// per-task train/test counts follow the published split table.

#include <set>

#include "labelgen/types.hpp"

namespace fixture {

struct FullBenchmark {
  labelgen::ClassTaxonomy taxonomy;
  labelgen::DatasetManifest manifest;
  std::set<int> excluded;
};

FullBenchmark make_full_benchmark();

}  // namespace fixture
