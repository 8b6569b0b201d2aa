#pragma once

#include <stdexcept>
#include <string>

namespace dtdcva {

/// Input or configuration rejected before any computation starts.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Cholesky pivot failure; carries the index of the failing pivot.
class NotPositiveDefiniteError : public std::runtime_error {
  public:
    NotPositiveDefiniteError(const std::string& what, std::size_t pivot)
        : std::runtime_error(what), pivot_(pivot) {}
    std::size_t pivot() const { return pivot_; }

  private:
    std::size_t pivot_;
};

/// Quote set admits no arbitrage-free default curve.
class ArbitrageError : public std::runtime_error {
  public:
    explicit ArbitrageError(const std::string& what) : std::runtime_error(what) {}
};

/// Market PD curve unusable at the requested point (zero, unit, or flat PD).
class DegenerateCurveError : public std::runtime_error {
  public:
    explicit DegenerateCurveError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dtdcva
