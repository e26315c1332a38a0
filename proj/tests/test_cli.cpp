#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "cli.hpp"
#include "ddt/oracle.hpp"
#include "json.hpp"

namespace {

using namespace ddt;
using namespace ddt::cli;
using json = nlohmann::json;

options opts(bool as_json = false) { return options{.seed = 7, .json = as_json, .timing = false}; }

std::string run(int (*fn)(const std::string&, const options&, std::ostream&),
                const std::string& in, const options& o, int* code = nullptr) {
  std::ostringstream out;
  const int rc = fn(in, o, out);
  if (code) *code = rc;
  return out.str();
}

TEST(Parse, SubsetSum) {
  const auto a = parse_subset_sum("m=7 t=1\n3 5");
  EXPECT_EQ(a.inst.m, 7u);
  EXPECT_EQ(a.target, 1u);
  EXPECT_EQ(a.inst.items, (std::vector<item>{{3, 1}, {5, 1}}));
  const auto b = parse_subset_sum("m=7 t=1\n3:2 5");
  EXPECT_EQ(b.inst.items, (std::vector<item>{{3, 2}, {5, 1}}));
}

TEST(Parse, ReducesAndMerges) {
  const auto a = parse_subset_sum("m=7 t=-1\n10 3 -4:2 # trailing comment\n");
  EXPECT_EQ(a.target, 6u);
  EXPECT_EQ(a.inst.items, (std::vector<item>{{3, 4}}));
}

TEST(Parse, SemicolonBreaksLines) {
  const auto a = parse_subset_sum("m=7 t=1; 3 5");
  EXPECT_EQ(a.inst.items.size(), 2u);
}

TEST(Parse, Sequence) {
  const auto s = parse_sequence("n=3\n1 1 1 2 2");
  EXPECT_EQ(s.n, 3u);
  EXPECT_EQ(s.elements, (std::vector<std::uint64_t>{1, 1, 1, 2, 2}));
  EXPECT_EQ(parse_sequence("n=3\n1:3 5:2").elements, (std::vector<std::uint64_t>{1, 1, 1, 2, 2}));
}

TEST(Parse, ErrorsCarryPosition) {
  try {
    parse_subset_sum("m=7 t=1\n3 x5");
    FAIL();
  } catch (const parse_error& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 3u);
  }
  try {
    parse_subset_sum("m=0 t=1\n3");
    FAIL();
  } catch (const parse_error& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 1u);
  }
  try {
    parse_subset_sum("m=7 t=1\n3:y");
    FAIL();
  } catch (const parse_error& e) {
    EXPECT_EQ(e.column(), 3u);
  }
  EXPECT_THROW(parse_subset_sum("m=7\n3"), parse_error);
  EXPECT_THROW(parse_subset_sum("m=7 t=1 q=2\n3"), parse_error);
  EXPECT_THROW(parse_subset_sum(""), parse_error);
  EXPECT_THROW(parse_sequence("n=3 n=3\n1"), parse_error);
}

TEST(Parse, WrongEgzLengthIsPositioned) {
  try {
    run(run_egz, "n=3\n1 1 1 2", opts());
    FAIL();
  } catch (const parse_error& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    run(run_egz, "n=2\n1 1 1\n0", opts());
    FAIL();
  } catch (const parse_error& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 1u);
  }
}

TEST(SubsetSum, Reachable) {
  int code = -1;
  const auto out = run(run_subset_sum, "m=7 t=1; 3 5", opts(true), &code);
  EXPECT_EQ(code, exit_ok);
  const auto j = json::parse(out);
  EXPECT_EQ(j["result"], "reachable");
  EXPECT_EQ(j["witness"], json::parse(R"([{"value":3,"count":1},{"value":5,"count":1}])"));
  EXPECT_FALSE(j.contains("elapsed_ms"));
}

TEST(SubsetSum, Unreachable) {
  int code = -1;
  const auto out = run(run_subset_sum, "m=7 t=2; 3 5", opts(), &code);
  EXPECT_EQ(code, exit_negative);
  EXPECT_NE(out.find("result: no subset"), std::string::npos);
}

TEST(SubsetSum, ReportKeyOrder) {
  const auto j = nlohmann::ordered_json::parse(run(run_subset_sum, "m=7 t=1; 3 5", opts(true)));
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"command", "seed", "result", "witness", "stats"}));
  std::vector<std::string> stat_keys;
  for (const auto& [k, v] : j["stats"].items()) stat_keys.push_back(k);
  EXPECT_EQ(stat_keys, (std::vector<std::string>{"rotations", "bit_fixes", "skipped_copies",
                                                 "restarts", "max_height", "nodes_built"}));
}

TEST(SubsetSum, TimingIsOptIn) {
  options o = opts(true);
  o.timing = true;
  EXPECT_TRUE(json::parse(run(run_subset_sum, "m=7 t=1; 3 5", o)).contains("elapsed_ms"));
}

TEST(SubsetSum, IdenticalOutputForIdenticalSeed) {
  const std::string in = "m=1000 t=481\n145:2 905:1 870:1 641:2 690:2 731:2";
  EXPECT_EQ(run(run_subset_sum, in, opts(true)), run(run_subset_sum, in, opts(true)));
}

TEST(Egz, Small) {
  const auto j = json::parse(run(run_egz, "n=3\n1 1 1 2 2", opts(true)));
  EXPECT_EQ(j["indices"], json::parse("[0,1,2]"));
  EXPECT_EQ(j["result"], "ok");
}

TEST(ZeroRun, Range) {
  const auto j = json::parse(run(run_zero_run, "n=4\n1 2 1 3", opts(true)));
  EXPECT_EQ(j["range"], json::parse("[0,2]"));
}

std::string verify_out(const std::string& input, const std::string& cert, int* code) {
  std::ostringstream out;
  *code = run_verify(input, cert, opts(), out);
  return out.str();
}

TEST(Verify, SubsetSumCertificates) {
  int code = -1;
  const std::string in = "m=7 t=1; 3 5";
  verify_out(in, run(run_subset_sum, in, opts(true)), &code);
  EXPECT_EQ(code, exit_ok);
  verify_out(in, "3:1 5:1", &code);
  EXPECT_EQ(code, exit_ok);
  verify_out(in, "3:2", &code);
  EXPECT_EQ(code, exit_negative);
  verify_out(in, "none", &code);
  EXPECT_EQ(code, exit_negative);
  verify_out("m=7 t=2; 3 5", "none", &code);
  EXPECT_EQ(code, exit_ok);
  verify_out("m=7 t=2; 3 5", run(run_subset_sum, "m=7 t=2; 3 5", opts(true)), &code);
  EXPECT_EQ(code, exit_ok);
}

TEST(Verify, EgzAndZeroRunCertificates) {
  int code = -1;
  const std::string in = "n=3\n1 1 1 2 2";
  verify_out(in, run(run_egz, in, opts(true)), &code);
  EXPECT_EQ(code, exit_ok);
  verify_out(in, "0 1 3", &code);
  EXPECT_EQ(code, exit_negative);
  const std::string zr = "n=4\n1 2 1 3";
  verify_out(zr, run(run_zero_run, zr, opts(true)), &code);
  EXPECT_EQ(code, exit_ok);
  verify_out(zr, "1 2", &code);
  EXPECT_EQ(code, exit_negative);
}

TEST(Verify, MalformedCertificate) {
  int code = -1;
  EXPECT_THROW(verify_out("m=7 t=1; 3 5", "{not json", &code), invalid_input);
  EXPECT_THROW(verify_out("n=3\n1 1 1 2 2", "0 x 2", &code), invalid_input);
}

TEST(DumpTree, Dot) {
  const auto out = run(run_dump_tree, "0110 1001\n", opts());
  EXPECT_NE(out.find("digraph ddt"), std::string::npos);
  EXPECT_NE(out.find("length 8"), std::string::npos);
  EXPECT_THROW(run(run_dump_tree, " \n", opts()), invalid_input);
}

TEST(Bench, SmallSweep) {
  std::ostringstream out;
  const bench_options b{.min_exp = 6, .max_exp = 8, .reps = 3, .egz = true};
  EXPECT_EQ(run_bench(b, opts(true), out), exit_ok);
  const auto j = json::parse(out.str());
  ASSERT_EQ(j["modsum"].size(), 3u);
  EXPECT_TRUE(j["modsum"][1].contains("ratio"));
  EXPECT_TRUE(j["modsum"][0]["stats"].contains("bit_fixes"));
  EXPECT_FALSE(j["egz"].empty());
}

TEST(Selftest, Passes) {
  std::ostringstream out;
  EXPECT_EQ(run_selftest(opts(), out), exit_ok) << out.str();
}

TEST(DenseInstance, LargerExtendsSmaller) {
  const auto a = dense_instance(1 << 10, 5);
  const auto b = dense_instance(1 << 11, 5);
  for (const auto& it : a.items) EXPECT_EQ(b.multiplicity_of(it.value), it.multiplicity);
  EXPECT_EQ(dense_instance(1 << 10, 5).items, a.items);
}

// The binary itself: exit codes, stdin, environment override.

int shell(const std::string& cmd, std::string* out) {
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return -1;
  char buf[4096];
  out->clear();
  while (std::size_t k = fread(buf, 1, sizeof buf, p)) out->append(buf, k);
  const int st = pclose(p);
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

const std::string bin = DDT_CLI_PATH;
const std::string samples = DDT_SAMPLES_DIR;

TEST(Binary, ExitCodes) {
  std::string out;
  EXPECT_EQ(shell(bin + " --seed 1 subset-sum -i " + samples + "/subset_reachable.txt", &out), 0);
  EXPECT_NE(out.find("witness: 3:1 5:1"), std::string::npos);
  EXPECT_EQ(shell(bin + " --seed 1 subset-sum -i " + samples + "/subset_unreachable.txt", &out), 1);
  EXPECT_EQ(shell("printf 'n=3\\n1 1 x' | " + bin + " egz 2>&1", &out), 2);
  EXPECT_NE(out.find("line 2, column 5"), std::string::npos);
  EXPECT_EQ(shell(bin + " subset-sum -i /nonexistent 2>&1", &out), 2);
  EXPECT_EQ(shell(bin + " --bogus 2>&1", &out), 2);
}

TEST(Binary, SeedEchoAndOverride) {
  std::string out;
  ASSERT_EQ(shell(bin + " --seed 11 --json egz -i " + samples + "/egz_small.txt", &out), 0);
  EXPECT_EQ(json::parse(out)["seed"], 11);
  ASSERT_EQ(shell("DDT_SEED=42 " + bin + " --seed 11 --json egz -i " + samples + "/egz_small.txt",
                  &out),
            0);
  EXPECT_EQ(json::parse(out)["seed"], 42);
  ASSERT_EQ(shell(bin + " --json egz -i " + samples + "/egz_small.txt", &out), 0);
  EXPECT_TRUE(json::parse(out)["seed"].is_number_unsigned());
}

TEST(Binary, VerifyRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "ddt_cli_test";
  std::filesystem::create_directories(dir);
  const auto cert = (dir / "cert.json").string();
  std::string out;
  for (const char* name : {"egz_60.txt", "egz_composite.txt", "subset_1000.txt", "zero_run.txt"}) {
    const std::string input = samples + "/" + name;
    const std::string cmd = std::string(name).rfind("egz", 0) == 0       ? "egz"
                            : std::string(name).rfind("zero", 0) == 0 ? "zero-run"
                                                                         : "subset-sum";
    const int rc = shell(bin + " --seed 3 --json " + cmd + " -i " + input + " > " + cert, &out);
    ASSERT_LE(rc, 1) << name;
    EXPECT_EQ(shell(bin + " verify -i " + input + " -c " + cert, &out), 0) << name << out;
  }
}

TEST(Binary, DumpTreeToFile) {
  const auto dot = (std::filesystem::temp_directory_path() / "ddt_cli_tm16.dot").string();
  std::string out;
  ASSERT_EQ(shell(bin + " --seed 2 dump-tree -i " + samples + "/thue_morse16.txt --dot " + dot, &out),
            0);
  std::ifstream f(dot);
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("digraph ddt"), std::string::npos);
}

}  // namespace
