#include "asyncon/topology.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "asyncon/errors.hpp"

namespace asyncon {

namespace {

void validate_weights(const MatrixXd& w) {
  if (w.rows() == 0) throw PreconditionError("topology must have at least one agent");
  if (w.rows() != w.cols()) {
    throw PreconditionError("topology matrix is not square: " + std::to_string(w.rows()) + "x" +
                            std::to_string(w.cols()));
  }
  for (Index i = 0; i < w.rows(); ++i) {
    bool any = false;
    for (Index j = 0; j < w.cols(); ++j) {
      const double v = w(i, j);
      if (!std::isfinite(v)) {
        throw ParseError("non-finite weight", static_cast<std::size_t>(i + 1),
                         static_cast<std::size_t>(j + 1));
      }
      if (v < 0.0) {
        throw ParseError("negative weight " + std::to_string(v), static_cast<std::size_t>(i + 1),
                         static_cast<std::size_t>(j + 1));
      }
      any = any || v > 0.0;
    }
    if (!any) throw ParseError("zero row: agent uses no information", static_cast<std::size_t>(i + 1), 0);
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view tok, std::size_t line, std::size_t col) {
  tok = trim(tok);
  if (tok.empty()) throw ParseError("empty field", line, col);
  if (tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("malformed number '" + std::string(tok) + "'", line, col);
  }
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  if (line.find(',') != std::string_view::npos) {
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      if (i > start) out.push_back(line.substr(start, i - start));
    }
  }
  return out;
}

DirectedTopology parse_json(std::string_view source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(source);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), 0, 0);
  }
  if (!j.is_object() || !j.contains("weights") || !j["weights"].is_array()) {
    throw ParseError("JSON topology needs a \"weights\" array of rows", 0, 0);
  }
  const auto& rows = j["weights"];
  const auto n = rows.size();
  if (j.contains("n") && (!j["n"].is_number_integer() || j["n"].get<long long>() != static_cast<long long>(n))) {
    throw ParseError("JSON \"n\" does not match the number of weight rows", 0, 0);
  }
  if (n == 0) throw ParseError("empty topology", 0, 0);
  MatrixXd w(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!rows[i].is_array() || rows[i].size() != n) {
      throw ParseError("matrix is not square: row has " +
                           std::to_string(rows[i].is_array() ? rows[i].size() : 0) +
                           " entries, expected " + std::to_string(n),
                       i + 1, 0);
    }
    for (std::size_t c = 0; c < n; ++c) {
      if (!rows[i][c].is_number()) throw ParseError("non-numeric entry", i + 1, c + 1);
      w(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c].get<double>();
    }
  }
  validate_weights(w);
  return DirectedTopology(std::move(w));
}

}  // namespace

DirectedTopology::DirectedTopology(MatrixXd weights) : weights_(std::move(weights)) {
  try {
    validate_weights(weights_);
  } catch (const ParseError& e) {
    throw PreconditionError(e.what());
  }
}

Index DirectedTopology::nonzero_count() const { return (weights_.array() != 0.0).count(); }

DirectedTopology load_topology(std::string_view source) {
  const auto body = trim(source);
  if (!body.empty() && body.front() == '{') return parse_json(body);

  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_lines;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    const auto nl = source.find('\n', pos);
    const auto raw = source.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? source.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_fields(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) row.push_back(parse_number(fields[c], line_no, c + 1));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("ragged matrix: row has " + std::to_string(row.size()) +
                           " entries, expected " + std::to_string(rows.front().size()),
                       line_no, 0);
    }
    rows.push_back(std::move(row));
    row_lines.push_back(line_no);
  }
  if (rows.empty()) throw ParseError("empty topology", 0, 0);
  const auto n = rows.size();
  if (rows.front().size() != n) {
    throw ParseError("matrix is not square: " + std::to_string(n) + " rows of " +
                         std::to_string(rows.front().size()) + " entries",
                     row_lines.back(), 0);
  }
  MatrixXd w(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < n; ++c) {
      const double v = rows[i][c];
      if (v < 0.0) throw ParseError("negative weight " + std::to_string(v), row_lines[i], c + 1);
      w(static_cast<Index>(i), static_cast<Index>(c)) = v;
    }
    if (std::all_of(rows[i].begin(), rows[i].end(), [](double v) { return v == 0.0; })) {
      throw ParseError("zero row: agent uses no information", row_lines[i], 0);
    }
  }
  validate_weights(w);
  return DirectedTopology(std::move(w));
}

DirectedTopology load_topology_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open topology file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return load_topology(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.line(), e.column());
  }
}

std::string format_topology(const DirectedTopology& t) {
  std::ostringstream out;
  out << std::setprecision(17);
  const auto& w = t.weights();
  for (Index i = 0; i < w.rows(); ++i) {
    for (Index j = 0; j < w.cols(); ++j) {
      if (j) out << ',';
      out << w(i, j);
    }
    out << '\n';
  }
  return out.str();
}

RowStochasticMatrix row_normalize(const DirectedTopology& t) {
  MatrixXd f = t.weights();
  for (Index i = 0; i < f.rows(); ++i) {
    const double sum = f.row(i).sum();
    // Rows already stochastic up to rounding are kept verbatim so that
    // decimal input like 0.1,0.2,0.2,0.4,0.1 is not perturbed.
    if (std::abs(sum - 1.0) > kStochasticTol) f.row(i) /= sum;
  }
  return RowStochasticMatrix(std::move(f));
}

std::vector<InfluenceEdge> influence_edges(const MatrixXd& f) {
  std::vector<InfluenceEdge> edges;
  for (Index i = 0; i < f.rows(); ++i) {
    for (Index j = 0; j < f.cols(); ++j) {
      if (i != j && f(i, j) > 0.0) edges.push_back({i, j});
    }
  }
  return edges;
}

std::vector<Index> find_leaders(const RowStochasticMatrix& f, double tol) {
  std::vector<Index> leaders;
  const auto& m = f.matrix();
  for (Index i = 0; i < m.rows(); ++i) {
    if (std::abs(m(i, i) - 1.0) > tol) continue;
    bool basis = true;
    for (Index j = 0; j < m.cols() && basis; ++j) {
      if (j != i && std::abs(m(i, j)) > tol) basis = false;
    }
    if (basis) leaders.push_back(i);
  }
  return leaders;
}

std::vector<bool> reachable_from(const MatrixXd& f, const std::vector<Index>& sources) {
  const Index n = f.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::deque<Index> queue;
  for (Index s : sources) {
    if (!seen[static_cast<std::size_t>(s)]) {
      seen[static_cast<std::size_t>(s)] = true;
      queue.push_back(s);
    }
  }
  // Edge j -> i when f(i, j) > 0: i consumes j's state.
  while (!queue.empty()) {
    const Index j = queue.front();
    queue.pop_front();
    for (Index i = 0; i < n; ++i) {
      if (i != j && f(i, j) > 0.0 && !seen[static_cast<std::size_t>(i)]) {
        seen[static_cast<std::size_t>(i)] = true;
        queue.push_back(i);
      }
    }
  }
  return seen;
}

RootedStructure classify_roots(const RowStochasticMatrix& f) {
  RootedStructure s;
  s.leaders = find_leaders(f);
  s.m = static_cast<Index>(s.leaders.size());
  const auto all = [](const std::vector<bool>& v) {
    return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
  };
  for (Index r = 0; r < f.dim() && !s.has_spanning_tree; ++r) {
    s.has_spanning_tree = all(reachable_from(f.matrix(), {r}));
  }
  s.is_m_rooted_leader_form = !s.leaders.empty() && all(reachable_from(f.matrix(), s.leaders));
  return s;
}

MatrixXd LeaderOrdering::x() const {
  const Index k = ordered.dim() - m;
  return ordered.matrix().bottomLeftCorner(k, m);
}

MatrixXd LeaderOrdering::y() const {
  const Index k = ordered.dim() - m;
  return ordered.matrix().bottomRightCorner(k, k);
}

MatrixXd permute(const MatrixXd& f, const std::vector<Index>& perm) {
  const Index n = f.rows();
  MatrixXd g(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) g(a, b) = f(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
  }
  return g;
}

MatrixXd unpermute(const MatrixXd& g, const std::vector<Index>& perm) {
  const Index n = g.rows();
  MatrixXd f(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) f(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]) = g(a, b);
  }
  return f;
}

LeaderOrdering reorder_leaders_first(const RowStochasticMatrix& f) {
  const auto s = classify_roots(f);
  if (s.leaders.empty()) {
    throw PreconditionError("reorder_leaders_first: no leader (identity) rows");
  }
  if (!s.is_m_rooted_leader_form) {
    throw PreconditionError(
        "reorder_leaders_first: some follower is not influenced by any leader");
  }
  std::vector<Index> perm = s.leaders;
  for (Index i = 0; i < f.dim(); ++i) {
    if (!std::binary_search(s.leaders.begin(), s.leaders.end(), i)) perm.push_back(i);
  }
  return LeaderOrdering{perm, RowStochasticMatrix(permute(f.matrix(), perm)), s.m};
}

}  // namespace asyncon
