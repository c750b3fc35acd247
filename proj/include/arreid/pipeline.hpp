#pragma once

// Command-line pipeline. Subcommands:
//   synth        synthetic dataset on disk (PNG images + JSONL manifests)
//   stats        manifest → aspect-ratio stats JSON + histogram CSV/PNG
//   plan         stats + base height → resize plan JSON
//   augment      manifest + mixup config → mixed PNGs + per-image plan sidecars
//   train-toy    config (+ manifest, plan) → params, loss CSV, feature store per target
//   extract      params + manifest → feature store
//   fuse         N feature stores + manifest + policy → fused feature store
//   eval         query store + gallery store + protocol → report JSON + CMC CSV/PNG
//   losses-demo  seed → loss values and finite-difference reports
// Failures exit nonzero with {"error": kind, "message": ...} on stderr.

#include <ostream>
#include <string>
#include <vector>

#include "arreid/error.hpp"

namespace arreid {

// `args` excludes the program name.
int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int exit_code_for(ErrorKind kind);

}  // namespace arreid
