#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctf/error.hpp"

namespace ctf {

enum class SeqFormat { plain, csv, fasta };

SeqFormat parse_seq_format(const std::string& name);

// Bidirectional map between category labels and codes 1..C0.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> symbols);

  int size() const { return static_cast<int>(symbols_.size()); }
  bool contains(const std::string& s) const { return index_.count(s) > 0; }
  // 1-based code; throws ValidationError for unknown symbols.
  int encode(const std::string& s) const;
  const std::string& decode(int code) const;
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

// A categorical sequence plus, once build_lag_design has run, its lagged
// design. y holds codes in 1..C0. w(j-1, t-t_star) = y[t-j] for lags
// j=1..q and t=t_star..T (1-based t). n_counts(j-1, r-1) counts lag-j
// occurrences of category r across the modeled range.
struct SequenceData {
  Eigen::VectorXi y;
  int C0 = 0;
  int T = 0;
  int q = 0;
  int t_star = 0;
  Alphabet alphabet;
  Eigen::MatrixXi w;
  Eigen::MatrixXi n_counts;

  int n_modeled() const { return T - q; }
  // 1-based lag j, 0-based modeled position i (t = t_star + i).
  int lag_value(int j, int i) const { return w(j - 1, i); }
};

// Reads one sequence; the result carries no lag design (q = 0).
// plain: whitespace-separated tokens. csv: single column, optional
// header. fasta: exactly one record, one symbol per character.
// A declared alphabet fixes the category order; otherwise distinct
// symbols are collected and sorted lexicographically.
SequenceData load_sequence(const std::filesystem::path& file, SeqFormat format,
                           const std::optional<std::vector<std::string>>& alphabet = std::nullopt);

// Builds y directly from tokens (used by loaders and tests).
SequenceData make_sequence(const std::vector<std::string>& tokens,
                           const std::optional<std::vector<std::string>>& alphabet = std::nullopt);

// Attaches the lag design for maximal order q; requires T > q.
SequenceData build_lag_design(SequenceData seq, int q);

std::vector<std::string> decode_sequence(const SequenceData& seq);

}  // namespace ctf
