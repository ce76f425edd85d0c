#ifndef SIMAN_ERRORS_HPP
#define SIMAN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace siman {

// Every failure mode in the toolkit maps to one of these codes so callers
// can branch without parsing message strings.
enum class errc {
  all_zero,
  empty_code,
  too_large,
  zero_direction,
  out_of_range,
  invalid_args,
  invalid_scale,
  length_mismatch,
  shape_mismatch,
  bad_geometry,
  non_finite,
  dataset_empty,
  degenerate,
  bad_magnitude,
  bad_label,
  bad_magic,
  bad_version,
  corrupt,
  io,
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace siman

#endif
