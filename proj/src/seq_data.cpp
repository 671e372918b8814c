#include "ctf/seq_data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace ctf {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const std::set<std::string>& header_words() {
  static const std::set<std::string> words = {"y", "value", "symbol", "state", "category"};
  return words;
}

}  // namespace

SeqFormat parse_seq_format(const std::string& name) {
  const std::string n = lower(name);
  if (n == "plain") return SeqFormat::plain;
  if (n == "csv") return SeqFormat::csv;
  if (n == "fasta") return SeqFormat::fasta;
  throw ValidationError("unknown sequence format '" + name + "' (expected plain, csv or fasta)");
}

Alphabet::Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw ValidationError("alphabet must not be empty");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i].empty()) throw ValidationError("alphabet contains an empty symbol");
    auto [it, fresh] = index_.emplace(symbols_[i], static_cast<int>(i) + 1);
    (void)it;
    if (!fresh) throw ValidationError("alphabet symbol '" + symbols_[i] + "' repeats");
  }
}

int Alphabet::encode(const std::string& s) const {
  auto it = index_.find(s);
  if (it == index_.end()) throw ValidationError("symbol '" + s + "' is not in the alphabet");
  return it->second;
}

const std::string& Alphabet::decode(int code) const {
  if (code < 1 || code > size()) throw ValidationError("code " + std::to_string(code) + " outside alphabet");
  return symbols_[static_cast<std::size_t>(code) - 1];
}

SequenceData make_sequence(const std::vector<std::string>& tokens,
                           const std::optional<std::vector<std::string>>& alphabet) {
  if (tokens.empty()) throw ValidationError("input error: sequence is empty");
  Alphabet ab;
  if (alphabet) {
    ab = Alphabet(*alphabet);
  } else {
    std::set<std::string> distinct(tokens.begin(), tokens.end());
    ab = Alphabet(std::vector<std::string>(distinct.begin(), distinct.end()));
  }
  SequenceData seq;
  seq.alphabet = ab;
  seq.C0 = ab.size();
  seq.T = static_cast<int>(tokens.size());
  seq.y.resize(seq.T);
  for (int t = 0; t < seq.T; ++t) {
    if (!ab.contains(tokens[static_cast<std::size_t>(t)]))
      throw ValidationError("decode error: symbol '" + tokens[static_cast<std::size_t>(t)] +
                            "' at position " + std::to_string(t + 1) + " is not in the alphabet");
    seq.y[t] = ab.encode(tokens[static_cast<std::size_t>(t)]);
  }
  return seq;
}

namespace {

std::vector<std::string> read_plain(std::istream& in) {
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::vector<std::string> read_csv(std::istream& in, const std::optional<std::vector<std::string>>& alphabet) {
  std::vector<std::string> tokens;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::string cell = strip(line);
    if (!cell.empty() && cell.back() == ',') cell = strip(cell.substr(0, cell.size() - 1));
    if (cell.find(',') != std::string::npos)
      throw ValidationError("csv input must be a single column, got '" + line + "'");
    if (cell.empty()) continue;
    if (first) {
      first = false;
      const bool known_header = header_words().count(lower(cell)) > 0;
      const bool outside_declared = alphabet && std::find(alphabet->begin(), alphabet->end(), cell) == alphabet->end();
      if (outside_declared || (!alphabet && known_header)) continue;
    }
    tokens.push_back(cell);
  }
  return tokens;
}

std::vector<std::string> read_fasta(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  int records = 0;
  while (std::getline(in, line)) {
    const std::string s = strip(line);
    if (s.empty()) continue;
    if (s[0] == '>') {
      ++records;
      if (records > 1) throw ValidationError("fasta input holds more than one record; one sequence per fit");
      continue;
    }
    if (records == 0) throw ValidationError("fasta input must start with a '>' header");
    for (char c : s) tokens.push_back(std::string(1, c));
  }
  return tokens;
}

}  // namespace

SequenceData load_sequence(const std::filesystem::path& file, SeqFormat format,
                           const std::optional<std::vector<std::string>>& alphabet) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open sequence file '" + file.string() + "'");
  std::vector<std::string> tokens;
  switch (format) {
    case SeqFormat::plain: tokens = read_plain(in); break;
    case SeqFormat::csv: tokens = read_csv(in, alphabet); break;
    case SeqFormat::fasta: tokens = read_fasta(in); break;
  }
  if (tokens.empty()) throw ValidationError("input error: sequence file '" + file.string() + "' holds no data");
  return make_sequence(tokens, alphabet);
}

SequenceData build_lag_design(SequenceData seq, int q) {
  if (q < 1) throw ValidationError("maximal order q must be at least 1");
  if (seq.T <= q)
    throw ValidationError("insufficient data: T=" + std::to_string(seq.T) +
                          " leaves no modeled points at order q=" + std::to_string(q));
  seq.q = q;
  seq.t_star = q + 1;
  const int n = seq.T - q;
  seq.w.resize(q, n);
  seq.n_counts = Eigen::MatrixXi::Zero(q, seq.C0);
  for (int j = 1; j <= q; ++j) {
    for (int i = 0; i < n; ++i) {
      // t = t_star + i in 1-based time; y index is 0-based.
      const int v = seq.y[seq.t_star + i - 1 - j];
      seq.w(j - 1, i) = v;
      seq.n_counts(j - 1, v - 1) += 1;
    }
  }
  return seq;
}

std::vector<std::string> decode_sequence(const SequenceData& seq) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(seq.T));
  for (int t = 0; t < seq.T; ++t) out.push_back(seq.alphabet.decode(seq.y[t]));
  return out;
}

}  // namespace ctf
