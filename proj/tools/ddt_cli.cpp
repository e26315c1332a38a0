#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "cli.hpp"

namespace {

std::string slurp(const std::string& path) {
  if (path.empty() || path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ddt::invalid_input("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (std::uint64_t{rd()} << 32) ^ rd();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic strings, modular subset sum and zero-sum subsets"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string input;
  ddt::cli::options opt;
  app.add_option("--seed", seed, "hash seed (DDT_SEED overrides)");
  app.add_flag("--json", opt.json, "JSON report");
  app.add_flag("--timing", opt.timing, "include elapsed_ms");

  auto add_input = [&](CLI::App* sub) {
    sub->add_option("--input,-i", input, "input file (default stdin)");
  };

  auto* subset = app.add_subcommand("subset-sum", "decide a target and print a witness");
  add_input(subset);
  auto* egz = app.add_subcommand("egz", "n of 2n-1 residues summing to 0 mod n");
  add_input(egz);
  auto* zero = app.add_subcommand("zero-run", "contiguous run of n residues summing to 0 mod n");
  add_input(zero);

  std::string certificate;
  auto* verify = app.add_subcommand("verify", "re-check a certificate against an input");
  add_input(verify);
  verify->add_option("--certificate,-c", certificate, "certificate file")->required();

  std::string dot;
  auto* dump = app.add_subcommand("dump-tree", "Graphviz dump of the tree of a symbol string");
  add_input(dump);
  dump->add_option("--dot", dot, "output path (default stdout)");

  ddt::cli::bench_options bopt;
  auto* bench = app.add_subcommand("bench", "scaling sweep over dense random instances");
  bench->add_option("--min-exp", bopt.min_exp, "smallest m is 2^min-exp");
  bench->add_option("--max-exp", bopt.max_exp, "largest m is 2^max-exp");
  bench->add_option("--reps", bopt.reps, "repetitions per size");
  bench->add_flag("--egz", bopt.egz, "also sweep n = 3*2^k");

  auto* selftest = app.add_subcommand("selftest", "quick differential checks");

  for (auto* sub : app.get_subcommands({})) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ddt::cli::exit_input;
  }

  if (const char* env = std::getenv("DDT_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      seed = std::stoull(env, &used, 0);
      if (env[used] != '\0') throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      std::cerr << "error: DDT_SEED is not an unsigned integer: " << env << '\n';
      return ddt::cli::exit_input;
    }
  } else if (app.count("--seed") == 0) {
    seed = entropy_seed();
  }
  opt.seed = seed;

  try {
    if (subset->parsed()) return ddt::cli::run_subset_sum(slurp(input), opt, std::cout);
    if (egz->parsed()) return ddt::cli::run_egz(slurp(input), opt, std::cout);
    if (zero->parsed()) return ddt::cli::run_zero_run(slurp(input), opt, std::cout);
    if (verify->parsed()) {
      return ddt::cli::run_verify(slurp(input), slurp(certificate), opt, std::cout);
    }
    if (dump->parsed()) {
      const std::string text = slurp(input);
      if (dot.empty()) return ddt::cli::run_dump_tree(text, opt, std::cout);
      std::ofstream out(dot);
      if (!out) throw ddt::invalid_input("cannot write '" + dot + "'");
      return ddt::cli::run_dump_tree(text, opt, out);
    }
    if (bench->parsed()) return ddt::cli::run_bench(bopt, opt, std::cout);
    if (selftest->parsed()) return ddt::cli::run_selftest(opt, std::cout);
  } catch (const ddt::invalid_input& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ddt::cli::exit_input;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return ddt::cli::exit_input;
}
