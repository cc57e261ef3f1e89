#pragma once

#include <cstdint>
#include <string>

namespace af::csv {

/// 17-significant-digit decimal rendering; round-trips IEEE doubles and
/// keeps diffs meaningful.
std::string format_real(double value);

std::string format_int(std::int64_t value);
std::string format_u64(std::uint64_t value);

/// Exact results.csv header, pinned by contract.
inline constexpr const char* kResultsHeader =
    "method,n_max,s_tar,n_avg,seed,sample_idx,src_0,src_1,edit_0,edit_1,"
    "identity_err,assign_ok,target_loglik,source_loglik,cancel_ratio,runtime_us";

}  // namespace af::csv
