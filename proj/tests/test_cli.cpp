#include "cli_fixture.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace nv = noisevec;
using nvtest::CliFixture;

namespace {

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new nvtest::TempDir("cli");
    fixture_ = new CliFixture(NOISEVEC_CLI_PATH, dir_->path());
  }
  static void TearDownTestSuite() {
    delete fixture_;
    delete dir_;
  }
  static CliFixture& fx() { return *fixture_; }

  static int cli(const std::string& args, const std::string& env = "") { return nvtest::run_cli(fx().cli(), args, env); }
  static std::string q(const std::filesystem::path& p) { return CliFixture::q(p); }

 private:
  static inline nvtest::TempDir* dir_ = nullptr;
  static inline CliFixture* fixture_ = nullptr;
};

TEST_F(Cli, EverySubcommandMatchesLibrary) {
  const auto cases = fx().parity_cases();
  std::set<std::string> commands;
  for (const auto& c : cases) {
    SCOPED_TRACE(c.name);
    EXPECT_EQ(c.exit_code, 0);
    EXPECT_FALSE(c.library_output.empty());
    EXPECT_EQ(c.cli_output, c.library_output);
    commands.insert(c.name.substr(0, c.name.find(' ')));
  }
  EXPECT_EQ(commands, (std::set<std::string>{"synth", "train-prior", "extract", "stream", "sad", "eval", "apply", "baseline"}));
}

TEST_F(Cli, ParallelJobsMatchSerial) {
  for (const auto& c : fx().jobs_cases()) {
    SCOPED_TRACE(c.name);
    EXPECT_EQ(c.exit_code, 0);
    EXPECT_EQ(c.cli_output, c.library_output);
  }
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli(""), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("extract"), 1);
  EXPECT_EQ(cli("extract --feats a --manifest b"), 1);
  EXPECT_EQ(cli("extract --mode map --feats a"), 1);
  EXPECT_EQ(cli("extract --mode bogus --feats a"), 1);
  EXPECT_EQ(cli("sad --feats a --sad-window"), 1);
  EXPECT_EQ(cli("eval --manifest m --report compare"), 1);
  EXPECT_EQ(cli("--help"), 0);
}

TEST_F(Cli, DataErrorsExitTwo) {
  EXPECT_EQ(cli("sad --feats " + q(fx().work() / "missing.nvf")), 2);
  nv::detail::write_file(fx().work() / "bad.nvf", "NVF9garbage");
  EXPECT_EQ(cli("extract --feats " + q(fx().work() / "bad.nvf")), 2);
  EXPECT_EQ(cli("sad --sad-window 4 --feats " + q(fx().feat(0))), 2);
  EXPECT_EQ(cli("extract --feats " + q(fx().feat(0)) + " --labels " + q(fx().lab(1)) + " --out " + q(fx().out("x"))), 0);
  nv::detail::write_file(fx().work() / "short.lab", "SSN\n");
  EXPECT_EQ(cli("extract --feats " + q(fx().feat(0)) + " --labels " + q(fx().work() / "short.lab")), 2);
  EXPECT_EQ(cli("train-prior --min-class-frames 100000 --manifest " + q(fx().paths().manifest)), 2);
}

TEST_F(Cli, NumericalErrorsExitThree) {
  nv::detail::write_file(fx().work() / "npd.prior",
                         "NVPRIOR1\n[meta] dim=3 r_s=1 r_n=1\n[mu_n]\n0\t0\t0\n[a]\n0\t0\t0\n[B]\n0\t0\t0\n0\t0\t0\n0\t0\t0\n"
                         "[lambda_s]\n1\t0\t0\n0\t1\t0\n0\t0\t-1\n[lambda_n]\n1\t0\t0\n0\t1\t0\n0\t0\t1\n");
  EXPECT_EQ(cli("extract --mode map --prior " + q(fx().work() / "npd.prior") + " --feats " + q(fx().feat(0))), 3);
  EXPECT_EQ(cli("train-prior --ridge 0 --manifest " + q(fx().paths().manifest)), 0);
}

TEST_F(Cli, EnvironmentOverridesDefaults) {
  const auto o = fx().out("env");
  ASSERT_EQ(cli("sad --feats " + q(fx().feat(1)) + " --out " + q(o), "NV_SAD_QUANTILE=0.6 NV_SAD_WINDOW=7"), 0);
  const auto& u = fx().corpus()[1];
  EXPECT_EQ(CliFixture::read(o), nv::label_by_energy(u.features, {0, 0.6, 7}).to_string() + "\n");
  // An explicit flag wins over the environment.
  ASSERT_EQ(cli("sad --sad-window 3 --feats " + q(fx().feat(1)) + " --out " + q(o), "NV_SAD_WINDOW=7"), 0);
  EXPECT_EQ(CliFixture::read(o), nv::label_by_energy(u.features, {0, 0.3, 3}).to_string() + "\n");
}

TEST_F(Cli, StdoutWhenNoOutFile) {
  const auto cap = fx().work() / "stdout.txt";
  const std::string cmd = q(fx().cli()) + " baseline --method utt-mean --utt-id k --feats " + q(fx().feat(2)) + " > " + q(cap);
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(CliFixture::read(cap), nv::format_vector_line("k", nv::utt_mean(fx().corpus()[2].features)));
}

}  // namespace
