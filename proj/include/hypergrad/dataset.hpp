#pragma once

#include "hypergrad/problem.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace hypergrad {

struct Dataset {
  Matrix features;  // n x d
  Vector labels;    // n

  Index n() const { return features.rows(); }
  Index dims() const { return features.cols(); }
};

/// Largest feature index accepted by the parser. Keeps hostile input from
/// requesting an absurd dense allocation.
inline constexpr Index kMaxLibsvmIndex = 1'000'000;

/// Parses LIBSVM text (`label idx:val ...`, 1-based strictly increasing
/// indices, `#` starts a comment). d is the largest index seen unless `dims`
/// is given, in which case it must be at least that large.
Dataset parse_libsvm(std::string_view text, std::optional<Index> dims = std::nullopt);

/// Reads a file and parses it; IO failures raise DataError.
Dataset load_libsvm(const std::string& path, std::optional<Index> dims = std::nullopt);

/// Zero entries are omitted; values use the shortest round-trip form.
std::string serialize_libsvm(const Dataset& data);

/// Copy with extra zero columns so that dims() == d.
Dataset pad_columns(const Dataset& data, Index d);

/// DataError unless every label is -1 or +1.
void require_binary_labels(const Dataset& data);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

}  // namespace hypergrad
