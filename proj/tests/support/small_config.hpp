#pragma once

#include "pro/cli/config.hpp"

// Reduced geometry shared by the cli tests: 128-pixel scenes, 64-pixel
// patches refined at native resolution by a narrow network.
inline pro::cli::RunConfig small_config() {
  pro::cli::RunConfig c;
  c.gen.size = 128;
  c.oracle.working_res = 64;
  c.oracle.feature_channels = 4;
  c.net.patch_res = 64;
  c.net.base_channels = 4;
  c.train.patch_size = 64;
  c.train.overlap = 28;
  c.train.batch_size = 2;
  c.train.accum_steps = 1;
  c.train.max_steps = 2;
  c.eval.ce_overlap = 28;
  c.eval.ce_groups = 2;
  return c;
}
