//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "megan/checkpoint.h"
#include "megan/oracle.h"
#include "megan/smiles.h"
#include "test_util.h"

namespace megan {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli: public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path()
           / ("megan_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name())
              + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  Outcome megan(const std::string &args) const {
    const std::string out = path("stdout"), err = path("stderr");
    const std::string cmd = std::string(MEGAN_CLI) + " " + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
  }

  void write(const std::string &name, const std::string &text) const {
    write_file(dir_ / name, text);
  }

  // Tiny model and schedule shared by the training runs.
  void write_tiny_config() const {
    write("tiny.cfg",
          "model.atom_dim: int = 8\n"
          "model.bond_dim: int = 4\n"
          "model.heads: int = 2\n"
          "model.attention_dim: int = 4\n"
          "model.head_hidden: int = 8\n"
          "model.encoder_layers: int = 1\n"
          "model.decoder_layers: int = 1\n"
          "train.lr0: float = 0.001\n"
          "train.warmup_steps: int = 10\n"
          "train.eval_every: int = 40\n"
          "train.eval_subset: int = 10\n"
          "train.max_epochs: int = 2\n"
          "beam: int = 3\n"
          "max_steps: int = 6\n");
  }

  std::string smoke_files() const {
    return "--train " + test::data_path("smoke/raw_train.csv") + " --valid "
           + test::data_path("smoke/raw_val.csv") + " --test "
           + test::data_path("smoke/raw_test.csv");
  }

  fs::path dir_;
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(megan("").code, 1);
  EXPECT_EQ(megan("frobnicate").code, 1);
  EXPECT_EQ(megan("train --data x").code, 1);  // --checkpoint missing
  const Outcome r = megan("preprocess --input x.csv --out " + path("p") + " --set nosuch.key=3");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("nosuch.key"), std::string::npos) << r.err;
  EXPECT_EQ(megan("preprocess --input x.csv --out " + path("p") + " --ordering sideways").code, 1);
  EXPECT_NE(megan("--help").out.find("preprocess"), std::string::npos);
}

TEST_F(Cli, EmptyInputFailsWithStopOnlyVocab) {
  write("empty.csv", "");
  const Outcome r = megan("preprocess --input " + path("empty.csv") + " --out " + path("p"));
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.code, 2);
  const ActionVocab v = vocab_from_text(read_file(path("p/vocab.txt")));
  ASSERT_EQ(v.size(), 1);
  EXPECT_TRUE(v.at(0).is_stop());
}

TEST_F(Cli, BadRecordIsRejectedAndReported) {
  const std::vector<ReactionRecord> recs = test::smoke_split("train");
  std::ostringstream csv;
  csv << "id,class,rxn\n";
  for (int i = 0; i < 10; ++i)
    csv << recs[i].id << ',' << *recs[i].reaction_class << ','
        << (i == 6 ? std::string("CC(C>>CC") : recs[i].rxn) << '\n';
  write("ten.csv", csv.str());
  const Outcome r = megan("preprocess --input " + path("ten.csv") + " --out " + path("p"));
  EXPECT_EQ(r.code, 0) << r.err;
  const std::string report = read_file(path("p/report.txt"));
  EXPECT_NE(report.find("accepted\t9\n"), std::string::npos) << report;
  EXPECT_NE(report.find("rejected\t1\n"), std::string::npos);
  EXPECT_NE(report.find("rejection\t" + recs[6].id + "\ttrain\tSyntaxError"), std::string::npos);
  EXPECT_EQ(samples_from_text(read_file(path("p/samples_train.txt"))).size(), 9u);
  // An acceptance floor turns the same run into a data failure.
  EXPECT_EQ(megan("preprocess --input " + path("ten.csv") + " --out " + path("q")
                  + " --set preprocess.min_acceptance=0.95").code,
            2);
}

TEST_F(Cli, LockedOutputIsRefused) {
  fs::create_directories(path("p"));
  write("p/LOCK", "1\n");
  const Outcome r = megan("preprocess " + smoke_files() + " --out " + path("p"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("locked"), std::string::npos) << r.err;
}

TEST_F(Cli, PreprocessIsByteIdentical) {
  for (const char *out: { "a", "b" })
    ASSERT_EQ(megan("preprocess " + smoke_files() + " --ordering random --seed 3 --out " + path(out)).code, 0);
  for (const char *f: { "samples_train.txt", "samples_valid.txt", "samples_test.txt",
                        "vocab.txt", "features.txt", "report.txt", "run.cfg" })
    EXPECT_EQ(read_file(path(std::string("a/") + f)), read_file(path(std::string("b/") + f))) << f;
}

TEST_F(Cli, EvaluateScoresAndIgnoresRowOrder) {
  const std::vector<ReactionRecord> recs = test::smoke_split("test");
  std::ostringstream truth, exact, shuffled;
  truth << "id,class,rxn\n";
  std::vector<std::string> rows;
  int k = 0;
  for (const ReactionRecord &r: recs) {
    truth << r.id << ',' << *r.reaction_class << ',' << r.rxn << '\n';
    const std::string answer = canonical_key(parse_reaction(r.rxn, Direction::Retro).target());
    // Every third reaction has the answer at rank 2 only.
    std::string cands = answer + " -0.5";
    if (k++ % 3 == 0)
      cands = "C -0.1;" + cands;
    rows.push_back(r.id + "\tx\t" + cands + "\traw=2 unique=2 invalid=0");
    exact << r.id << "\tx\t" << answer << " 0\n";
  }
  write("truth.csv", truth.str());
  write("exact.tsv", exact.str());
  std::ostringstream ordered;
  for (const std::string &row: rows)
    ordered << row << '\n';
  write("pred.tsv", ordered.str());
  std::mt19937_64 rng(5);
  std::shuffle(rows.begin(), rows.end(), rng);
  for (const std::string &row: rows)
    shuffled << row << '\n';
  write("shuffled.tsv", shuffled.str());

  ASSERT_EQ(megan("evaluate --predictions " + path("exact.tsv") + " --truth " + path("truth.csv")
                  + " --output " + path("m0")).code, 0);
  const std::string kv0 = read_file(path("m0.kv"));
  EXPECT_NE(kv0.find("top1=1.000000\n"), std::string::npos) << kv0;
  EXPECT_NE(kv0.find("total=20\n"), std::string::npos);

  ASSERT_EQ(megan("evaluate --predictions " + path("pred.tsv") + " --truth " + path("truth.csv")
                  + " --output " + path("m1")).code, 0);
  ASSERT_EQ(megan("evaluate --predictions " + path("shuffled.tsv") + " --truth " + path("truth.csv")
                  + " --output " + path("m2")).code, 0);
  EXPECT_EQ(read_file(path("m1.tsv")), read_file(path("m2.tsv")));
  EXPECT_EQ(read_file(path("m1.kv")), read_file(path("m2.kv")));
  const std::string kv1 = read_file(path("m1.kv"));
  EXPECT_NE(kv1.find("top1=0.650000\n"), std::string::npos) << kv1;  // 13 of 20
  EXPECT_NE(kv1.find("top3=1.000000\n"), std::string::npos) << kv1;

  // Missing predictions count as misses.
  write("partial.tsv", rows[0] + "\n");
  ASSERT_EQ(megan("evaluate --predictions " + path("partial.tsv") + " --truth " + path("truth.csv")
                  + " --output " + path("m3") + " --ks 1,50").code, 0);
  const std::string kv3 = read_file(path("m3.kv"));
  EXPECT_NE(kv3.find("missing_predictions=19\n"), std::string::npos) << kv3;
  EXPECT_NE(kv3.find("top50=0.050000\n"), std::string::npos) << kv3;
  write("dup.tsv", rows[0] + "\n" + rows[0] + "\n");
  EXPECT_EQ(megan("evaluate --predictions " + path("dup.tsv") + " --truth " + path("truth.csv")).code, 2);
}

TEST_F(Cli, SmokePipeline) {
  write_tiny_config();
  const std::string cfg = " --config " + path("tiny.cfg");
  ASSERT_EQ(megan("preprocess " + smoke_files() + cfg + " --out " + path("prep")).code, 0);

  // Training twice from scratch gives identical bundles.
  for (const char *ck: { "ck1", "ck2" }) {
    const Outcome r = megan("train --data " + path("prep") + " --checkpoint " + path(ck) + cfg);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("eval 1 "), std::string::npos) << r.err;
  }
  for (const char *f: { kParamsFile, kBestParamsFile, kTrainStateFile, kModelFile, kVocabFile })
    EXPECT_EQ(read_file(path(std::string("ck1/") + f)), read_file(path(std::string("ck2/") + f))) << f;

  // Interrupted and resumed training matches the straight run.
  ASSERT_EQ(megan("train --data " + path("prep") + " --checkpoint " + path("ck3") + cfg
                  + " --stop-after-steps 17").code,
            0);
  EXPECT_NE(read_file(path("ck3/params.bin")), read_file(path("ck1/params.bin")));
  ASSERT_EQ(megan("train --data " + path("prep") + " --checkpoint " + path("ck3") + cfg).code, 0);
  EXPECT_EQ(read_file(path("ck3/params.bin")), read_file(path("ck1/params.bin")));
  EXPECT_EQ(read_file(path("ck3/train_state.txt")), read_file(path("ck1/train_state.txt")));

  // A different model cannot resume the checkpoint.
  const Outcome clash = megan("train --data " + path("prep") + " --checkpoint " + path("ck3") + cfg
                          + " --set model.atom_dim=12 --set model.heads=3");
  EXPECT_EQ(clash.code, 1) << clash.err;

  const std::vector<ReactionRecord> test_recs = test::smoke_split("test");
  std::ostringstream inputs;
  for (int i = 0; i < 5; ++i)
    inputs << test_recs[i].id << '\t'
           << write_smiles(strip_maps(parse_reaction(test_recs[i].rxn, Direction::Retro).product))
           << '\n';
  inputs << "junk\tC1CC(\n";
  write("inputs.txt", inputs.str());
  for (const char *out: { "pred1.tsv", "pred2.tsv" })
    ASSERT_EQ(megan("predict --checkpoint " + path("ck1") + " --input " + path("inputs.txt")
                    + " --output " + path(out)).code,
              0);
  const std::string pred = read_file(path("pred1.tsv"));
  EXPECT_EQ(pred, read_file(path("pred2.tsv")));
  std::istringstream lines(pred);
  std::string line;
  int rows = 0;
  bool error_row = false;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    ++rows;
    if (line.rfind("junk\t", 0) == 0) {
      error_row = true;
      EXPECT_NE(line.find("\t!error:SyntaxError"), std::string::npos) << line;
    }
    else {
      EXPECT_NE(line.find("raw="), std::string::npos) << line;
    }
  }
  EXPECT_EQ(rows, 6);
  EXPECT_TRUE(error_row);

  ASSERT_EQ(megan("predict --checkpoint " + path("ck1") + " --reactions "
                  + test::data_path("smoke/raw_test.csv") + " --output " + path("pred3.tsv"))
                .code,
            0);
  const Outcome ev = megan("evaluate --predictions " + path("pred3.tsv") + " --truth "
                       + test::data_path("smoke/raw_test.csv") + " --output " + path("metrics"));
  ASSERT_EQ(ev.code, 0) << ev.err;
  const std::string kv = read_file(path("metrics.kv"));
  for (const char *key: { "top1=", "top3=", "top5=", "top10=", "top20=", "top50=", "total=20" })
    EXPECT_NE(kv.find(key), std::string::npos) << kv;

  // Direction mismatch between checkpoint and request.
  EXPECT_NE(megan("predict --checkpoint " + path("ck1") + " --input " + path("inputs.txt")
                  + " --output " + path("x.tsv") + " --direction forward").code,
            0);
}

}  // namespace
}  // namespace megan
