#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddt/egz.hpp"
#include "ddt/errors.hpp"
#include "ddt/instance.hpp"

namespace ddt::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_negative = 1;  // no subset, invalid certificate, failed self test
inline constexpr int exit_input = 2;

/// Malformed input, located by 1-based line and column.
class parse_error : public invalid_input {
 public:
  parse_error(std::size_t line, std::size_t column, const std::string& what)
      : invalid_input("line " + std::to_string(line) + ", column " + std::to_string(column) +
                      ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct subset_sum_input {
  instance inst;
  std::uint64_t target = 0;
};

struct source_pos {
  std::size_t line = 1;
  std::size_t column = 1;
};

struct sequence_input {
  std::uint64_t n = 1;
  std::vector<std::uint64_t> elements;  // reduced mod n, in input order
  std::vector<source_pos> where;        // token position of each element
  source_pos end;                       // just past the last character
};

enum class input_kind { subset_sum, sequence };

/// Header `m=<int> t=<int>` followed by `<value>` or `<value>:<count>` tokens.
subset_sum_input parse_subset_sum(const std::string& text);

/// Header `n=<int>` followed by the same token grammar; `v:c` stands for c
/// copies of v. The length is not checked here.
sequence_input parse_sequence(const std::string& text);

input_kind detect_kind(const std::string& text);

struct options {
  std::uint64_t seed = 0;
  bool json = false;
  bool timing = false;
};

struct bench_options {
  unsigned min_exp = 12;
  unsigned max_exp = 17;
  unsigned reps = 5;
  bool egz = false;
};

// Each runner writes its report to `out` and returns the process exit code.
// Input errors propagate as exceptions.
int run_subset_sum(const std::string& input, const options& opt, std::ostream& out);
int run_egz(const std::string& input, const options& opt, std::ostream& out);
int run_zero_run(const std::string& input, const options& opt, std::ostream& out);
int run_verify(const std::string& input, const std::string& certificate, const options& opt,
               std::ostream& out);
int run_dump_tree(const std::string& input, const options& opt, std::ostream& out);
int run_bench(const bench_options& bench, const options& opt, std::ostream& out);
int run_selftest(const options& opt, std::ostream& out);

/// Instance used by bench and the scaling checks: each residue v in [0, m)
/// gets a Poisson(1) multiplicity drawn from one stream in order of v, so a
/// larger instance with the same seed extends a smaller one.
instance dense_instance(std::uint64_t m, std::uint64_t seed);

}  // namespace ddt::cli
