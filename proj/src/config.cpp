#include "fsl/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace fsl {

namespace {

std::string join(const std::vector<std::string>& issues) {
  std::string out = "invalid problem file:";
  for (const auto& s : issues) out += "\n  - " + s;
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<int> to_int(const std::string& s) {
  int v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

struct Entry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

using Section = std::map<std::string, Entry>;

// Key/value store with violation collection.
class Reader {
 public:
  std::map<std::string, Section> sections;
  std::vector<std::string> issues;
  std::filesystem::path base;

  void fail(const std::string& where, const std::string& what) { issues.push_back(where + ": " + what); }

  const Entry* find(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.used = true;
    return &k->second;
  }

  static std::string name(const std::string& sec, const std::string& key) {
    return sec.empty() ? key : sec + "." + key;
  }

  std::optional<double> number(const std::string& sec, const std::string& key, bool required,
                               std::optional<double> fallback = std::nullopt) {
    const Entry* e = find(sec, key);
    if (!e) {
      if (required) fail(name(sec, key), "missing required key");
      return fallback;
    }
    auto v = to_double(e->value);
    if (!v || !std::isfinite(*v)) {
      fail(name(sec, key) + " (line " + std::to_string(e->line) + ")",
           "expected a number, got '" + e->value + "'");
      return std::nullopt;
    }
    return v;
  }

  std::optional<int> integer(const std::string& sec, const std::string& key, bool required,
                             std::optional<int> fallback = std::nullopt) {
    const Entry* e = find(sec, key);
    if (!e) {
      if (required) fail(name(sec, key), "missing required key");
      return fallback;
    }
    auto v = to_int(e->value);
    if (!v) {
      fail(name(sec, key) + " (line " + std::to_string(e->line) + ")",
           "expected an integer, got '" + e->value + "'");
    }
    return v;
  }

  std::optional<Mat> table(const std::string& where, const std::string& token) {
    const std::filesystem::path p = base / token;
    if (!std::filesystem::exists(p)) {
      fail(where, "data file not found: " + p.string());
      return std::nullopt;
    }
    try {
      return read_csv_matrix(p);
    } catch (const Error& e) {
      fail(where, e.what());
      return std::nullopt;
    }
  }

  // zero | const:<v> | file:<csv>, shaped rows x cols.
  std::optional<Mat> field(const std::string& sec, const std::string& key, int rows, int cols,
                           const std::string& fallback) {
    const Entry* e = find(sec, key);
    const std::string tok = e ? e->value : fallback;
    const std::string where = name(sec, key) + (e ? " (line " + std::to_string(e->line) + ")" : "");
    if (tok == "zero") return Mat::Zero(rows, cols);
    if (tok.rfind("const:", 0) == 0) {
      auto v = to_double(tok.substr(6));
      if (!v) {
        fail(where, "bad constant in '" + tok + "'");
        return std::nullopt;
      }
      return Mat::Constant(rows, cols, *v);
    }
    if (tok.rfind("file:", 0) == 0) {
      auto m = table(where, tok.substr(5));
      if (!m) return std::nullopt;
      if ((rows == 1 || cols == 1) && m->rows() == cols && m->cols() == rows) m->transposeInPlace();
      if (m->rows() != rows || m->cols() != cols) {
        fail(where, "expected a " + std::to_string(rows) + " x " + std::to_string(cols) +
                        " table, got " + std::to_string(m->rows()) + " x " +
                        std::to_string(m->cols()));
        return std::nullopt;
      }
      return m;
    }
    if (auto v = to_double(tok)) return Mat::Constant(rows, cols, *v);
    fail(where, "expected zero, const:<v> or file:<path>, got '" + tok + "'");
    return std::nullopt;
  }
};

void tokenize(std::istream& in, Reader& r) {
  std::string line;
  std::string section;
  for (int no = 1; std::getline(in, line); ++no) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        r.fail("line " + std::to_string(no), "unterminated section header");
        continue;
      }
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      r.sections[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      r.fail("line " + std::to_string(no), "expected key = value");
      continue;
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    std::string sec = section;
    if (sec.empty()) {
      // edge.1.a outside any section
      if (const auto dot = key.rfind('.'); dot != std::string::npos) {
        sec = key.substr(0, dot);
        key = key.substr(dot + 1);
      }
    }
    auto& slot = r.sections[sec][key];
    if (!slot.value.empty()) r.fail(Reader::name(sec, key), "duplicate key (line " + std::to_string(no) + ")");
    slot = Entry{value, no, false};
  }
}

std::optional<AdmissibleSet> parse_uad(Reader& r, const std::string& sec) {
  const Entry* e = r.find(sec, "uad");
  if (!e || e->value == "unconstrained") return AdmissibleSet::unconstrained();
  const std::string where = Reader::name(sec, "uad");
  if (e->value.rfind("box:", 0) == 0) {
    const std::string rest = e->value.substr(4);
    const auto colon = rest.find(':');
    auto lo = colon == std::string::npos ? std::nullopt : to_double(rest.substr(0, colon));
    auto hi = colon == std::string::npos ? std::nullopt : to_double(rest.substr(colon + 1));
    if (!lo || !hi) {
      r.fail(where, "expected box:<lo>:<hi>, got '" + e->value + "'");
      return std::nullopt;
    }
    if (*lo > *hi) {
      r.fail(where, "box bounds must satisfy lo <= hi");
      return std::nullopt;
    }
    return AdmissibleSet::box(*lo, *hi);
  }
  r.fail(where, "expected unconstrained or box:<lo>:<hi>, got '" + e->value + "'");
  return std::nullopt;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : Error(ErrorKind::Config, join(issues)), issues_(std::move(issues)) {}

Mat read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Config, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    bool numeric = true;
    while (ss >> tok) {
      auto v = to_double(tok);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      require(rows.empty(), ErrorKind::Config, path.string() + ": non-numeric entry in data row");
      continue;  // header
    }
    if (row.empty()) continue;
    require(rows.empty() || row.size() == rows.front().size(), ErrorKind::Config,
            path.string() + ": rows have different lengths");
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorKind::Config, path.string() + ": no data");
  Mat m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError({"cannot open problem file " + path.string()});
  Reader r;
  r.base = path.parent_path();
  tokenize(in, r);

  RunConfig cfg;
  cfg.source_file = path;
  const auto alpha = r.number("", "alpha", true);
  const auto horizon = r.number("", "T", true);
  const auto nt = r.integer("", "nt", true);
  if (alpha && !(*alpha > 0.0 && *alpha <= 1.0)) r.fail("alpha", "fractional order must lie in (0, 1]");
  if (horizon && !(*horizon > 0.0)) r.fail("T", "time horizon must be positive");
  if (nt && *nt < 1) r.fail("nt", "need at least one time step");
  const bool time_ok = horizon && nt && *horizon > 0.0 && *nt >= 1;
  if (alpha) cfg.alpha = *alpha;
  if (time_ok) cfg.time = TimeGrid(*horizon, *nt);
  const int points = time_ok ? *nt + 1 : 1;

  cfg.graph = r.find("", "n") != nullptr;
  int n = 1;
  if (cfg.graph) {
    n = r.integer("", "n", true).value_or(0);
    const auto m = r.integer("", "m_split", true);
    if (n < 2) r.fail("n", "a star graph needs n >= 2 edges");
    if (m && (*m < 2 || *m > n)) {
      r.fail("m_split", "split index must satisfy 2 <= m <= n, got " + std::to_string(*m));
    }
    cfg.m_split = m.value_or(2);
  }
  n = std::max(n, 1);

  std::optional<double> shared_a;
  for (int i = 1; i <= n; ++i) {
    const std::string sec = "edge." + std::to_string(i);
    if (!r.sections.count(sec)) {
      r.fail(sec, "missing edge section");
      continue;
    }
    const auto a = r.number(sec, "a", true);
    const auto b = r.number(sec, "b", true);
    const auto cells = r.integer(sec, "m_cells", true);
    if (a && shared_a && *a != *shared_a) r.fail(sec + ".a", "all edges must share the vertex a");
    if (a && !shared_a) shared_a = a;
    if (!a || !b || !cells) continue;
    if (!(*b > *a)) {
      r.fail(sec, "need a < b");
      continue;
    }
    if (*cells < 2) {
      r.fail(sec + ".m_cells", "need at least 2 cells");
      continue;
    }
    EdgeSpec spec;
    spec.grid = Grid1D(*a, *b, *cells);
    const int nodes = spec.grid.nodes();
    const auto beta = r.field(sec, "beta", 1, nodes, "const:1");
    const auto q = r.field(sec, "q", 1, nodes, "const:1");
    const auto y0 = r.field(sec, "y0", 1, nodes, "zero");
    const auto f = r.field(sec, "f", points, nodes, "zero");
    const auto yd = r.field(sec, "ydtarget", points, nodes, "zero");
    if (beta && q) {
      spec.coeffs = EdgeCoefficients::from_samples(beta->row(0).transpose(), q->row(0).transpose());
      if (!(spec.coeffs.beta0 > 0.0)) {
        r.fail(sec + ".beta", "coefficient positivity assumption violated: need beta(x) >= beta0 > 0");
      }
      if (!(spec.coeffs.q0 > 0.0)) {
        r.fail(sec + ".q", "coefficient positivity assumption violated: need q(x) >= q0 > 0");
      }
    }
    if (y0) spec.y0 = y0->row(0).transpose();
    if (f) spec.source = *f;
    if (yd) spec.target = *yd;
    cfg.edges.push_back(std::move(spec));
  }

  const int first = cfg.graph ? 2 : 1;
  for (int i = first; i <= n; ++i) {
    const std::string sec = "channel." + std::to_string(i);
    ChannelSpec ch;
    ch.dirichlet = cfg.graph && i <= cfg.m_split;
    if (const Entry* kind = r.find(sec, "kind")) {
      if (kind->value != "dirichlet" && kind->value != "neumann") {
        r.fail(sec + ".kind", "expected dirichlet or neumann, got '" + kind->value + "'");
      } else if ((kind->value == "dirichlet") != ch.dirichlet) {
        r.fail(sec + ".kind", std::string("edge ") + std::to_string(i) + " is " +
                                  (ch.dirichlet ? "dirichlet" : "neumann") +
                                  "-controlled for the given m_split");
      }
    }
    if (auto uad = parse_uad(r, sec)) ch.admissible = *uad;
    ch.weight = r.number(sec, "weight", false, 1.0).value_or(1.0);
    if (!(ch.weight > 0.0)) r.fail(sec + ".weight", "channel weight must be positive");
    if (auto v = r.field(sec, "value", points, 1, "zero")) ch.value = v->col(0);
    cfg.channels.push_back(std::move(ch));
  }

  const std::string opt = "optimizer";
  if (const Entry* algo = r.find(opt, "algo")) {
    if (algo->value == "projected_gradient") {
      cfg.optimizer.algorithm = Algorithm::ProjectedGradient;
    } else if (algo->value == "fixed_point") {
      cfg.optimizer.algorithm = Algorithm::FixedPoint;
    } else {
      r.fail("optimizer.algo", "expected projected_gradient or fixed_point, got '" + algo->value + "'");
    }
  }
  cfg.optimizer.tol = r.number(opt, "tol", false, 1e-8).value_or(1e-8);
  cfg.optimizer.max_iter = r.integer(opt, "max_iter", false, 500).value_or(500);
  cfg.tikhonov = r.number(opt, "tikhonov_n", false, 1.0).value_or(1.0);
  if (!(cfg.optimizer.tol > 0.0)) r.fail("optimizer.tol", "must be positive");
  if (cfg.optimizer.max_iter < 0) r.fail("optimizer.max_iter", "must be nonnegative");
  if (!(cfg.tikhonov > 0.0)) r.fail("optimizer.tikhonov_n", "Tikhonov weight must be positive");

  for (const auto& [sec, keys] : r.sections) {
    for (const auto& [key, entry] : keys) {
      if (!entry.used) r.fail(Reader::name(sec, key) + " (line " + std::to_string(entry.line) + ")", "unknown key");
    }
  }
  if (!r.issues.empty()) throw ConfigError(std::move(r.issues));
  if (!cfg.graph) cfg.channels.front().dirichlet = false;
  return cfg;
}

EdgeOperator RunConfig::edge_operator() const {
  return assemble_stiffness(alpha, edges.front().grid, edges.front().coeffs, false);
}

EdgeControlProblem RunConfig::edge_problem() const {
  const EdgeSpec& e = edges.front();
  EdgeControlProblem pb{edge_operator(), time, e.source, e.y0, e.target, tikhonov,
                        channels.front().admissible};
  return pb;
}

StarGraphProblem RunConfig::graph_problem() const {
  StarGraphProblem pb;
  pb.alpha = alpha;
  pb.time = time;
  pb.m_split = m_split;
  for (const EdgeSpec& e : edges) {
    pb.grids.push_back(e.grid);
    pb.coeffs.push_back(e.coeffs);
    pb.source.push_back(e.source);
    pb.y0.push_back(e.y0);
    pb.target.push_back(e.target);
  }
  return pb;
}

GraphControlProblem RunConfig::graph_control() const {
  GraphControlProblem pb;
  pb.graph = graph_problem();
  pb.weights.resize(channels.size());
  for (size_t c = 0; c < channels.size(); ++c) {
    pb.weights[c] = channels[c].weight;
    pb.admissible.push_back(channels[c].admissible);
  }
  return pb;
}

Mat RunConfig::control_values() const {
  Mat u(time.points(), channels.size());
  for (size_t c = 0; c < channels.size(); ++c) u.col(c) = channels[c].value;
  return u;
}

}  // namespace fsl
