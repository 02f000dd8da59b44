#pragma once

#include <optional>
#include <string>
#include <vector>

namespace xbar::bench {

/// One row of the published platform comparison. Values are means as
/// printed; energy in microjoules, time in milliseconds, EDP in uJ*s.
struct PublishedRow {
  std::string platform;
  std::string modality;
  /// Registry id of the matching benchmark network, or empty.
  std::string network;
  double accuracy_pct;
  double energy_uj;
  double latency_ms;
  double edp_ujs;
  std::string citation;
};

/// Read-only; never mutated by any command.
const std::vector<PublishedRow>& published_rows();

const PublishedRow* find_published(const std::string& platform, const std::string& network);

}  // namespace xbar::bench
