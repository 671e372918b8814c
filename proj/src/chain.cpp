#include "ctf/chain.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctf/error.hpp"

namespace ctf {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  // %.17g round-trips doubles; trim to the shortest representation that
  // still does so the way JSON emitters do.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write '" + file.string() + "'");
  return out;
}

std::ifstream open_in(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  return in;
}

json vec_to_json(const Eigen::VectorXi& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXi json_to_veci(const json& a) {
  Eigen::VectorXi v(static_cast<int>(a.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = a[static_cast<std::size_t>(i)].get<int>();
  return v;
}

}  // namespace

void write_chain_jsonl(const PosteriorChain& chain, const std::filesystem::path& file) {
  auto out = open_out(file);
  for (const auto& s : chain.samples) {
    json rec;
    rec["iter"] = s.iter;
    rec["k"] = vec_to_json(s.k);
    rec["ktilde"] = vec_to_json(s.ktilde);
    rec["loglik"] = s.loglik;
    out << rec.dump() << "\n";
  }
}

PosteriorChain read_chain_jsonl(const std::filesystem::path& file) {
  auto in = open_in(file);
  PosteriorChain chain;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError("chain file line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!rec.contains("iter") || !rec.contains("k") || !rec.contains("ktilde") || !rec.contains("loglik"))
      throw ValidationError("chain file line " + std::to_string(lineno) + ": missing field");
    ChainSample s;
    s.iter = rec["iter"].get<int>();
    s.k = json_to_veci(rec["k"]);
    s.ktilde = json_to_veci(rec["ktilde"]);
    s.loglik = rec["loglik"].get<double>();
    if (chain.q == 0) chain.q = static_cast<int>(s.k.size());
    if (s.k.size() != chain.q || s.ktilde.size() != chain.q)
      throw ValidationError("chain file line " + std::to_string(lineno) + ": inconsistent lag dimension");
    chain.samples.push_back(std::move(s));
  }
  if (chain.samples.empty()) throw ValidationError("input error: chain file '" + file.string() + "' holds no samples");
  return chain;
}

void write_snapshots_csv(const PosteriorChain& chain, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "iter";
  for (int j = 1; j <= chain.q; ++j) out << ",w" << j;
  for (int c = 1; c <= chain.C0; ++c) out << ",p" << c;
  out << "\n";
  for (const auto& s : chain.samples) {
    for (std::size_t i = 0; i < chain.snapshot_contexts.size(); ++i) {
      out << s.iter;
      const auto& ctx = chain.snapshot_contexts[i];
      for (int j = 0; j < ctx.size(); ++j) out << "," << ctx[j];
      for (int c = 0; c < s.snapshots.cols(); ++c)
        out << "," << format_double(s.snapshots(static_cast<long long>(i), c));
      out << "\n";
    }
  }
}

void read_snapshots_csv(PosteriorChain& chain, const std::filesystem::path& file) {
  auto in = open_in(file);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("snapshot file '" + file.string() + "' is empty");
  int q = 0, C0 = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell.size() > 1 && cell[0] == 'w') ++q;
      if (cell.size() > 1 && cell[0] == 'p') ++C0;
    }
  }
  if (q == 0 || C0 == 0) throw ValidationError("snapshot file '" + file.string() + "' has a malformed header");
  if (chain.q != 0 && q != chain.q) throw ValidationError("snapshot file lag dimension differs from chain");
  chain.q = q;
  chain.C0 = C0;

  // Rows come in blocks of equal iter, one block per kept sample, with
  // the same context order inside every block.
  struct Row {
    int iter;
    Eigen::VectorXi ctx;
    Eigen::VectorXd p;
  };
  std::vector<Row> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != 1 + q + C0)
      throw ValidationError("snapshot file line " + std::to_string(lineno) + ": wrong column count");
    Row r;
    r.iter = std::stoi(cells[0]);
    r.ctx.resize(q);
    for (int j = 0; j < q; ++j) r.ctx[j] = std::stoi(cells[static_cast<std::size_t>(1 + j)]);
    r.p.resize(C0);
    for (int c = 0; c < C0; ++c) r.p[c] = std::stod(cells[static_cast<std::size_t>(1 + q + c)]);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ValidationError("input error: snapshot file '" + file.string() + "' holds no rows");
  if (rows.size() % chain.samples.size() != 0)
    throw ValidationError("snapshot file row count is not a multiple of the chain sample count");
  const std::size_t n_ctx = rows.size() / chain.samples.size();
  std::vector<Eigen::VectorXi> contexts;
  for (std::size_t i = 0; i < n_ctx; ++i) contexts.push_back(rows[i].ctx);
  for (std::size_t s = 0; s < chain.samples.size(); ++s) {
    auto& sample = chain.samples[s];
    sample.snapshots.resize(static_cast<long long>(n_ctx), C0);
    for (std::size_t i = 0; i < n_ctx; ++i) {
      const Row& r = rows[s * n_ctx + i];
      if (r.iter != sample.iter)
        throw ValidationError("snapshot file iter " + std::to_string(r.iter) + " does not match chain sample order");
      if ((r.ctx.array() != contexts[i].array()).any())
        throw ValidationError("snapshot file context order varies across samples");
      sample.snapshots.row(static_cast<long long>(i)) = r.p.transpose();
    }
  }
  chain.snapshot_contexts = std::move(contexts);
}

void write_tensor_csv(const TransitionTensor& t, const std::filesystem::path& file) {
  auto out = open_out(file);
  for (int j = 1; j <= t.q; ++j) out << "w" << j << ",";
  for (int c = 1; c <= t.C0; ++c) out << "p" << c << (c == t.C0 ? "" : ",");
  out << "\n";
  Eigen::VectorXi ctx = Eigen::VectorXi::Ones(t.q);
  for (long long r = 0; r < t.rows(); ++r) {
    for (int j = 0; j < t.q; ++j) out << ctx[j] << ",";
    for (int c = 0; c < t.C0; ++c) out << format_double(t.p(r, c)) << (c + 1 == t.C0 ? "" : ",");
    out << "\n";
    int j = t.q - 1;
    while (j >= 0 && ctx[j] == t.C0) {
      ctx[j] = 1;
      --j;
    }
    if (j >= 0) ++ctx[j];
  }
}

TransitionTensor read_tensor_csv(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("tensor file '" + file.string() + "' is empty");
  int q = 0, C0 = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty() && cell[0] == 'w') ++q;
      if (!cell.empty() && cell[0] == 'p') ++C0;
    }
  }
  if (q == 0 || C0 == 0) throw ValidationError("tensor file '" + file.string() + "' has a malformed header");
  TransitionTensor t;
  t.q = q;
  t.C0 = C0;
  long long rows = 1;
  for (int j = 0; j < q; ++j) rows *= C0;
  t.p.resize(rows, C0);
  long long seen = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != q + C0)
      throw ValidationError("tensor file line " + std::to_string(lineno) + ": wrong column count");
    Eigen::VectorXi ctx(q);
    for (int j = 0; j < q; ++j) ctx[j] = std::stoi(cells[static_cast<std::size_t>(j)]);
    const long long r = t.context_row(ctx);
    for (int c = 0; c < C0; ++c) t.p(r, c) = std::stod(cells[static_cast<std::size_t>(q + c)]);
    ++seen;
  }
  if (seen != rows) throw ValidationError("tensor file covers " + std::to_string(seen) + " of " + std::to_string(rows) + " contexts");
  return t;
}

void write_tensor_json(const TransitionTensor& t, const std::filesystem::path& file) {
  json doc;
  doc["C0"] = t.C0;
  doc["q"] = t.q;
  json rows = json::array();
  for (long long r = 0; r < t.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < t.C0; ++c) row.push_back(t.p(r, c));
    rows.push_back(std::move(row));
  }
  doc["p"] = std::move(rows);
  auto out = open_out(file);
  out << doc.dump(2) << "\n";
}

TransitionTensor read_tensor_json(const std::filesystem::path& file) {
  auto in = open_in(file);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("tensor file '" + file.string() + "': " + e.what());
  }
  TransitionTensor t;
  t.C0 = doc.at("C0").get<int>();
  t.q = doc.at("q").get<int>();
  long long rows = 1;
  for (int j = 0; j < t.q; ++j) rows *= t.C0;
  const auto& p = doc.at("p");
  if (static_cast<long long>(p.size()) != rows)
    throw ValidationError("dimension error: tensor json holds " + std::to_string(p.size()) + " rows, expected " +
                          std::to_string(rows));
  t.p.resize(rows, t.C0);
  for (long long r = 0; r < rows; ++r) {
    const auto& row = p[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != t.C0) throw ValidationError("dimension error: tensor json row length != C0");
    for (int c = 0; c < t.C0; ++c) t.p(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return t;
}

}  // namespace ctf
