#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "ddt/modsum.hpp"
#include "ddt/oracle.hpp"
#include "ddt/tree.hpp"
#include "json.hpp"

namespace ddt::cli {

namespace {

using json = nlohmann::ordered_json;
using clock_type = std::chrono::steady_clock;

struct token {
  std::string text;
  source_pos pos;
};

struct document {
  std::vector<token> header;
  std::vector<token> body;
  source_pos header_pos;
  source_pos end;
};

// Splits text into logical lines (newline or ';'), drops '#' comments, and
// separates the first nonempty line as the header.
document tokenize(const std::string& text) {
  document doc;
  std::vector<std::vector<token>> lines(1);
  source_pos pos;
  token cur;
  bool comment = false;
  auto flush = [&] {
    if (!cur.text.empty()) lines.back().push_back(std::move(cur));
    cur = token{};
  };
  for (char ch : text) {
    if (ch == '\n') {
      flush();
      comment = false;
      lines.emplace_back();
      ++pos.line;
      pos.column = 1;
      continue;
    }
    if (!comment) {
      if (ch == '#') {
        flush();
        comment = true;
      } else if (ch == ';') {
        flush();
        lines.emplace_back();
      } else if (ch == ' ' || ch == '\t' || ch == '\r') {
        flush();
      } else {
        if (cur.text.empty()) cur.pos = pos;
        cur.text.push_back(ch);
      }
    }
    ++pos.column;
  }
  flush();
  doc.end = pos;
  bool have_header = false;
  for (auto& line : lines) {
    if (line.empty()) continue;
    if (!have_header) {
      doc.header = std::move(line);
      have_header = true;
    } else {
      for (auto& t : line) doc.body.push_back(std::move(t));
    }
  }
  if (!have_header) throw parse_error(pos.line, pos.column, "missing header line");
  doc.header_pos = doc.header.front().pos;
  return doc;
}

source_pos shifted(source_pos p, std::size_t by) { return {p.line, p.column + by}; }

template <class Int>
Int parse_int(std::string_view s, source_pos at, const char* what) {
  Int v{};
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (!s.empty() && s.front() == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  if (b == e || ec != std::errc{} || p != e) {
    throw parse_error(at.line, at.column,
                      std::string("expected ") + what + ", got '" + std::string(s) + "'");
  }
  return v;
}

std::map<std::string, std::pair<std::int64_t, source_pos>> parse_header(
    const document& doc, std::initializer_list<const char*> keys) {
  std::map<std::string, std::pair<std::int64_t, source_pos>> out;
  for (const auto& t : doc.header) {
    const auto eq = t.text.find('=');
    if (eq == std::string::npos) {
      throw parse_error(t.pos.line, t.pos.column, "expected key=value, got '" + t.text + "'");
    }
    const std::string key = t.text.substr(0, eq);
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) ==
        keys.end()) {
      throw parse_error(t.pos.line, t.pos.column, "unknown header key '" + key + "'");
    }
    if (out.count(key)) throw parse_error(t.pos.line, t.pos.column, "repeated key '" + key + "'");
    out[key] = {parse_int<std::int64_t>(std::string_view(t.text).substr(eq + 1),
                                        shifted(t.pos, eq + 1), "an integer"),
                t.pos};
  }
  for (const char* k : keys) {
    if (!out.count(k)) {
      throw parse_error(doc.header_pos.line, doc.header_pos.column,
                        std::string("missing header key '") + k + "'");
    }
  }
  return out;
}

// Body token: value or value:count.
std::pair<std::int64_t, std::uint64_t> parse_item(const token& t) {
  const auto colon = t.text.find(':');
  const std::string_view s(t.text);
  if (colon == std::string::npos) return {parse_int<std::int64_t>(s, t.pos, "an integer"), 1};
  return {parse_int<std::int64_t>(s.substr(0, colon), t.pos, "an integer"),
          parse_int<std::uint64_t>(s.substr(colon + 1), shifted(t.pos, colon + 1),
                                   "a nonnegative count")};
}

std::uint64_t positive(const std::pair<std::int64_t, source_pos>& kv, const char* name) {
  if (kv.first < 1) {
    throw parse_error(kv.second.line, kv.second.column, std::string(name) + " must be at least 1");
  }
  return static_cast<std::uint64_t>(kv.first);
}

double ms_since(clock_type::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

json stats_json(std::uint64_t rotations, std::uint64_t bit_fixes, std::uint64_t skipped,
                std::uint64_t restarts, std::uint32_t max_height, std::uint64_t nodes_built) {
  return json{{"rotations", rotations},     {"bit_fixes", bit_fixes},
              {"skipped_copies", skipped},  {"restarts", restarts},
              {"max_height", max_height},   {"nodes_built", nodes_built}};
}

json stats_json(const modsum::solve_stats& s) {
  return stats_json(s.rotations, s.bit_fixes, s.skipped_copies, s.restarts, s.max_height,
                    s.nodes_built);
}

json stats_json(const egz::egz_stats& s) {
  return stats_json(s.rotations, s.bit_fixes, s.skipped_copies, s.restarts, s.max_height,
                    s.nodes_built);
}

void emit(std::ostream& out, const options& opt, json report, double elapsed_ms) {
  if (opt.timing) report["elapsed_ms"] = elapsed_ms;
  if (opt.json) {
    out << report.dump(2) << '\n';
    return;
  }
  for (const auto& [key, value] : report.items()) {
    out << key << ':';
    if (key == "witness") {
      if (value.empty()) out << " (empty)";
      for (const auto& p : value) out << ' ' << p["value"] << ':' << p["count"];
    } else if (value.is_array()) {
      for (const auto& v : value) out << ' ' << v;
    } else if (value.is_object()) {
      for (const auto& [k, v] : value.items()) out << ' ' << k << '=' << v;
    } else if (value.is_string()) {
      out << ' ' << value.get<std::string>();
    } else {
      out << ' ' << value;
    }
    out << '\n';
  }
}

json witness_json(const witness& w) {
  json arr = json::array();
  for (const auto& p : w.parts) arr.push_back({{"value", p.value}, {"count", p.multiplicity}});
  return arr;
}

template <class T>
T median(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

egz::egz_input sequence_to_egz(const sequence_input& seq) {
  const std::size_t want = 2 * seq.n - 1;
  if (seq.elements.size() != want) {
    const source_pos at = seq.elements.size() > want ? seq.where[want] : seq.end;
    throw parse_error(at.line, at.column,
                      "expected " + std::to_string(want) + " elements for n=" +
                          std::to_string(seq.n) + ", got " + std::to_string(seq.elements.size()));
  }
  return egz::egz_input{seq.n, seq.elements};
}

void check_zero_run_length(const sequence_input& seq) {
  if (seq.elements.size() != seq.n) {
    const source_pos at = seq.elements.size() > seq.n ? seq.where[seq.n] : seq.end;
    throw parse_error(at.line, at.column,
                      "expected " + std::to_string(seq.n) + " elements, got " +
                          std::to_string(seq.elements.size()));
  }
}

}  // namespace

input_kind detect_kind(const std::string& text) {
  const document doc = tokenize(text);
  for (const auto& t : doc.header) {
    if (t.text.rfind("m=", 0) == 0) return input_kind::subset_sum;
  }
  return input_kind::sequence;
}

subset_sum_input parse_subset_sum(const std::string& text) {
  const document doc = tokenize(text);
  const auto hdr = parse_header(doc, {"m", "t"});
  const std::uint64_t m = positive(hdr.at("m"), "m");
  std::vector<std::pair<std::int64_t, std::uint64_t>> pairs;
  pairs.reserve(doc.body.size());
  for (const auto& t : doc.body) pairs.push_back(parse_item(t));
  subset_sum_input in;
  in.inst = make_instance(m, pairs);
  in.target = reduce_mod(hdr.at("t").first, m);
  return in;
}

sequence_input parse_sequence(const std::string& text) {
  const document doc = tokenize(text);
  const auto hdr = parse_header(doc, {"n"});
  sequence_input seq;
  seq.n = positive(hdr.at("n"), "n");
  seq.end = doc.end;
  for (const auto& t : doc.body) {
    const auto [v, c] = parse_item(t);
    if (c > (std::uint64_t{1} << 32)) throw parse_error(t.pos.line, t.pos.column, "count too large");
    for (std::uint64_t i = 0; i < c; ++i) {
      seq.elements.push_back(reduce_mod(v, seq.n));
      seq.where.push_back(t.pos);
    }
  }
  return seq;
}

instance dense_instance(std::uint64_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::poisson_distribution<std::uint64_t> mult(1.0);
  std::vector<std::pair<std::int64_t, std::uint64_t>> pairs;
  pairs.reserve(m);
  for (std::uint64_t v = 0; v < m; ++v) pairs.emplace_back(static_cast<std::int64_t>(v), mult(rng));
  return make_instance(m, pairs);
}

int run_subset_sum(const std::string& input, const options& opt, std::ostream& out) {
  const auto in = parse_subset_sum(input);
  const auto t0 = clock_type::now();
  const auto dec = modsum::decide(in.inst, in.target, {.seed = hash_seed{opt.seed}});
  const double elapsed = ms_since(t0);
  json report{{"command", "subset-sum"}, {"seed", opt.seed}};
  if (dec.reachable) {
    if (!verify_witness(in.inst, in.target, *dec.witness_set)) {
      throw internal_inconsistency("produced witness does not verify");
    }
    report["result"] = "reachable";
    report["witness"] = witness_json(*dec.witness_set);
  } else {
    report["result"] = "no subset";
  }
  report["stats"] = stats_json(dec.result.stats);
  emit(out, opt, std::move(report), elapsed);
  return dec.reachable ? exit_ok : exit_negative;
}

int run_egz(const std::string& input, const options& opt, std::ostream& out) {
  const auto in = sequence_to_egz(parse_sequence(input));
  egz::egz_stats stats;
  const auto t0 = clock_type::now();
  const auto cert = egz::egz(in, {.seed = hash_seed{opt.seed}}, &stats);
  const double elapsed = ms_since(t0);
  if (!egz::verify_egz(in, cert)) throw internal_inconsistency("certificate does not verify");
  json report{{"command", "egz"}, {"seed", opt.seed}, {"result", "ok"},
              {"indices", cert.indices}, {"stats", stats_json(stats)}};
  emit(out, opt, std::move(report), elapsed);
  return exit_ok;
}

int run_zero_run(const std::string& input, const options& opt, std::ostream& out) {
  const auto seq = parse_sequence(input);
  check_zero_run_length(seq);
  const auto t0 = clock_type::now();
  const auto [first, last] = egz::contiguous_zero_sum(seq.n, seq.elements);
  const double elapsed = ms_since(t0);
  json report{{"command", "zero-run"},
              {"seed", opt.seed},
              {"result", "ok"},
              {"range", {first, last}},
              {"stats", stats_json(0, 0, 0, 0, 0, 0)}};
  emit(out, opt, std::move(report), elapsed);
  return exit_ok;
}

namespace {

// Certificate body as either a JSON report or plain tokens.
struct certificate_text {
  std::optional<json> report;
  std::vector<std::string> tokens;
};

certificate_text read_certificate(const std::string& text) {
  certificate_text c;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      c.report = json::parse(text);
    } catch (const json::parse_error& e) {
      throw invalid_input(std::string("certificate: ") + e.what());
    }
    return c;
  }
  std::istringstream is(text);
  for (std::string t; is >> t;) c.tokens.push_back(t);
  return c;
}

std::uint64_t cert_uint(const std::string& s) {
  return parse_int<std::uint64_t>(s, source_pos{}, "a nonnegative integer");
}

}  // namespace

int run_verify(const std::string& input, const std::string& certificate, const options& opt,
               std::ostream& out) {
  const auto cert = read_certificate(certificate);
  json report{{"command", "verify"}, {"seed", opt.seed}};
  bool valid = false;
  std::string kind;

  if (detect_kind(input) == input_kind::subset_sum) {
    kind = "subset-sum";
    const auto in = parse_subset_sum(input);
    bool claims_none = false;
    witness w;
    if (cert.report) {
      claims_none = cert.report->value("result", "") == "no subset";
      if (!claims_none) {
        for (const auto& p : cert.report->at("witness")) {
          w.parts.push_back({p.at("value").get<std::uint64_t>(), p.at("count").get<std::uint64_t>()});
        }
      }
    } else if (cert.tokens.size() == 1 && cert.tokens[0] == "none") {
      claims_none = true;
    } else {
      for (const auto& t : cert.tokens) {
        const auto [v, c] = parse_item(token{t, {}});
        if (v < 0) throw invalid_input("certificate value must be nonnegative");
        w.parts.push_back({static_cast<std::uint64_t>(v), c});
      }
    }
    if (claims_none) {
      // Checked against the plain dynamic program.
      valid = !oracle::dp_subset_sum(in.inst).reachable[in.target];
    } else {
      valid = verify_witness(in.inst, in.target, w);
    }
  } else {
    const auto seq = parse_sequence(input);
    std::vector<std::uint64_t> idx;
    bool is_range = false;
    if (cert.report) {
      if (cert.report->contains("range")) {
        is_range = true;
        for (const auto& v : cert.report->at("range")) idx.push_back(v.get<std::uint64_t>());
      } else {
        for (const auto& v : cert.report->at("indices")) idx.push_back(v.get<std::uint64_t>());
      }
    } else {
      for (const auto& t : cert.tokens) idx.push_back(cert_uint(t));
    }
    if (seq.elements.size() == 2 * seq.n - 1 && !is_range) {
      kind = "egz";
      const egz::egz_input in{seq.n, seq.elements};
      valid = egz::verify_egz(in, egz::certificate{{idx.begin(), idx.end()}});
    } else {
      kind = "zero-run";
      check_zero_run_length(seq);
      if (idx.size() == 2 && idx[0] <= idx[1] && idx[1] < seq.n) {
        std::uint64_t sum = 0;
        for (auto i = idx[0]; i <= idx[1]; ++i) sum = (sum + seq.elements[i]) % seq.n;
        valid = sum == 0;
      }
    }
  }
  report["result"] = valid ? "valid" : "invalid";
  report["kind"] = kind;
  emit(out, opt, std::move(report), 0.0);
  return valid ? exit_ok : exit_negative;
}

int run_dump_tree(const std::string& input, const options& opt, std::ostream& out) {
  std::string symbols;
  for (char ch : input) {
    if (ch != ' ' && ch != '\t' && ch != '\r' && ch != '\n') symbols.push_back(ch);
  }
  if (symbols.empty()) throw invalid_input("dump-tree needs a nonempty symbol string");
  hash_seed seed{opt.seed};
  for (int attempt = 0;; ++attempt) {
    try {
      collection c(seed);
      const auto h = c.from_symbols(std::string_view(symbols));
      out << "// seed " << seed.value << ", length " << h.length() << ", height " << h.height()
          << "\n";
      c.write_dot(out, h);
      return exit_ok;
    } catch (const collision_detected&) {
    } catch (const rebuild_required&) {
    }
    if (attempt >= 100) throw error("dump-tree: too many epoch restarts");
    seed = modsum::next_seed(seed);
  }
}

int run_bench(const bench_options& bench, const options& opt, std::ostream& out) {
  if (bench.reps == 0 || bench.min_exp > bench.max_exp || bench.max_exp > 24) {
    throw invalid_input("bench: need reps >= 1 and min-exp <= max-exp <= 24");
  }
  json report{{"command", "bench"}, {"seed", opt.seed}, {"reps", bench.reps}};
  json rows = json::array();
  double prev = 0;
  for (unsigned e = bench.min_exp; e <= bench.max_exp; ++e) {
    const std::uint64_t m = std::uint64_t{1} << e;
    std::vector<double> times;
    std::vector<modsum::solve_stats> stats;
    for (unsigned r = 0; r < bench.reps; ++r) {
      // Same instance seed for every size within one repetition.
      const instance inst = dense_instance(m, opt.seed + r);
      const auto t0 = clock_type::now();
      const auto res = modsum::solve_all(inst, {.seed = hash_seed{opt.seed ^ (r * 0x9E37ULL)}});
      times.push_back(ms_since(t0));
      stats.push_back(res.stats);
    }
    std::vector<std::size_t> order(times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
    const std::size_t mid = order[order.size() / 2];
    json row{{"m", m}, {"median_ms", times[mid]}, {"stats", stats_json(stats[mid])}};
    if (prev > 0) row["ratio"] = times[mid] / prev;
    prev = times[mid];
    rows.push_back(std::move(row));
  }
  report["modsum"] = std::move(rows);

  if (bench.egz) {
    json erows = json::array();
    prev = 0;
    for (unsigned e = bench.min_exp > 2 ? bench.min_exp - 2 : 0; e + 3 <= bench.max_exp; ++e) {
      const std::uint64_t n = std::uint64_t{3} << e;
      std::vector<double> times;
      for (unsigned r = 0; r < bench.reps; ++r) {
        std::mt19937_64 rng(opt.seed + r);
        egz::egz_input in{n, std::vector<std::uint64_t>(2 * n - 1)};
        for (auto& x : in.elements) x = rng() % n;
        const auto t0 = clock_type::now();
        const auto cert = egz::egz(in, {.seed = hash_seed{opt.seed + r}});
        times.push_back(ms_since(t0));
        if (!egz::verify_egz(in, cert)) throw internal_inconsistency("bench: bad certificate");
      }
      const double med = median(times);
      json row{{"n", n}, {"median_ms", med}};
      if (prev > 0) row["ratio"] = med / prev;
      prev = med;
      erows.push_back(std::move(row));
    }
    report["egz"] = std::move(erows);
  }

  if (opt.json) {
    out << report.dump(2) << '\n';
    return exit_ok;
  }
  out << "command: bench\nseed: " << opt.seed << "\nreps: " << bench.reps << '\n';
  for (const auto& row : report["modsum"]) {
    out << "m=" << row["m"] << " median_ms=" << row["median_ms"].get<double>();
    if (row.contains("ratio")) out << " ratio=" << row["ratio"].get<double>();
    for (const auto& [k, v] : row["stats"].items()) out << ' ' << k << '=' << v;
    out << '\n';
  }
  if (report.contains("egz")) {
    for (const auto& row : report["egz"]) {
      out << "egz n=" << row["n"] << " median_ms=" << row["median_ms"].get<double>();
      if (row.contains("ratio")) out << " ratio=" << row["ratio"].get<double>();
      out << '\n';
    }
  }
  return exit_ok;
}

namespace {

// Random operation trace against the plain model; false on the first
// disagreement. Epoch failures restart the trace under a fresh seed.
bool string_trace(std::mt19937_64& rng, std::uint64_t seed, int ops) {
  const auto trace_seed = rng();
  for (hash_seed hs{seed};; hs = modsum::next_seed(hs)) {
    std::mt19937_64 r(trace_seed);
    try {
      collection c(hs);
      std::vector<std::pair<string_handle, oracle::naive_string>> pool;
      auto random_string = [&] {
        std::string s(1 + r() % 64, '0');
        for (auto& ch : s) ch = static_cast<char>('a' + r() % 3);
        return s;
      };
      for (int i = 0; i < ops; ++i) {
        if (pool.empty() || r() % 4 == 0) {
          const auto s = random_string();
          pool.push_back({c.from_symbols(std::string_view(s)), oracle::naive_string(std::string_view(s))});
          continue;
        }
        auto& [h, model] = pool[r() % pool.size()];
        const std::uint64_t n = model.length();
        switch (r() % 5) {
          case 0: {
            const auto k = r() % n;
            if (c.get(h, k) != model.get(k)) return false;
            break;
          }
          case 1: {
            const auto k = r() % n;
            const char x = static_cast<char>('a' + r() % 3);
            pool.push_back({c.set(h, k, x), model.set(k, x)});
            break;
          }
          case 2: {
            if (n < 2) break;
            const auto k = 1 + r() % (n - 1);
            auto [a, b] = c.split(h, k);
            auto [ma, mb] = model.split(k);
            pool.push_back({a, ma});
            pool.push_back({b, mb});
            break;
          }
          case 3: {
            auto& [h2, m2] = pool[r() % pool.size()];
            if (model.length() + m2.length() > 4096) break;
            pool.push_back({c.concatenate(h, h2), concatenate(model, m2)});
            break;
          }
          default: {
            auto& [h2, m2] = pool[r() % pool.size()];
            if (c.lcp(h, h2) != lcp(model, m2)) return false;
            if (c.equal(h, h2) != (model == m2)) return false;
            const auto k = r() % n;
            pool.push_back({c.rotate(h, k), model.rotate(k)});
          }
        }
        if (pool.size() > 64) pool.erase(pool.begin());
      }
      for (const auto& [h, model] : pool) {
        const auto syms = c.to_symbols(h);
        if (syms != model.symbols()) return false;
      }
      return true;
    } catch (const collision_detected&) {
    } catch (const rebuild_required&) {
    }
  }
}

}  // namespace

int run_selftest(const options& opt, std::ostream& out) {
  std::mt19937_64 rng(opt.seed);
  int failures = 0;
  auto line = [&](bool ok, const std::string& what) {
    out << (ok ? "PASS " : "FAIL ") << what << '\n';
    if (!ok) ++failures;
  };

  bool ok = true;
  for (int i = 0; i < 100 && ok; ++i) ok = string_trace(rng, rng(), 200);
  line(ok, "string operations agree with the plain model (100 traces)");

  ok = true;
  for (int i = 0; i < 200 && ok; ++i) {
    const std::uint64_t m = 1 + rng() % 128;
    std::vector<std::pair<std::int64_t, std::uint64_t>> pairs;
    for (std::uint64_t k = rng() % 40; k > 0; --k) {
      pairs.emplace_back(static_cast<std::int64_t>(rng() % m), 1 + rng() % 3);
    }
    const auto inst = make_instance(m, pairs);
    const auto res = modsum::solve_all(inst, {.seed = hash_seed{rng()}});
    ok = res.reachable == oracle::dp_subset_sum(inst).reachable && res.stats.bit_fixes <= 2 * m;
    for (std::uint64_t t = 0; t < m && ok; ++t) {
      const auto w = modsum::reconstruct(res, inst, t);
      ok = w.has_value() == res.reachable[t] && (!w || verify_witness(inst, t, *w));
    }
  }
  line(ok, "subset sum agrees with the dynamic program (200 instances)");

  ok = true;
  for (std::uint64_t n = 1; n <= 24 && ok; ++n) {
    for (int k = 0; k < 20 && ok; ++k) {
      egz::egz_input in{n, std::vector<std::uint64_t>(2 * n - 1)};
      for (auto& x : in.elements) x = rng() % n;
      ok = egz::verify_egz(in, egz::egz(in, {.seed = hash_seed{rng()}}));
    }
  }
  line(ok, "zero-sum subsets verify for n <= 24");

  return failures == 0 ? exit_ok : exit_negative;
}

}  // namespace ddt::cli
