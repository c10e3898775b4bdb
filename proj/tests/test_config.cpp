#include <gtest/gtest.h>

#include <cmath>

#include "nlqm/config.hpp"

using namespace nlqm;

TEST(Config, DefaultsMatchScenario) {
  RunConfig c;
  EXPECT_EQ(c.model.q, 9);
  EXPECT_EQ(c.model.height, 10.0);
  EXPECT_EQ(c.model.inv_mass, 0.1);
  EXPECT_EQ(c.integ.steps, 10000u);
  EXPECT_EQ(c.integ.t_final, 10.0);
  EXPECT_EQ(c.integ.omega, 1e4);
  EXPECT_EQ(c.integ.method, Method::TaoExplicit);
}

TEST(Config, ParsesTextWithCommentsAndBlankLines) {
  RunConfig c;
  apply_text(c,
             "# a comment\n"
             "q = 7\n"
             "\n"
             "height=1   # trailing\n"
             "w = 2.2\n"
             "beta_ratio = 1.2\n"
             "method = ruth4\n"
             "scheme = norm\n"
             "sigma = 0.05\n"
             "boundary = dirichlet\n");
  EXPECT_EQ(c.model.q, 7);
  EXPECT_EQ(c.model.height, 1.0);
  EXPECT_EQ(c.model.w, 2.2);
  EXPECT_NEAR(c.model.beta1 / c.model.beta2, 1.2, 1e-15);
  EXPECT_EQ(c.integ.method, Method::Ruth4Frozen);
  EXPECT_EQ(c.scheme.kind, SchemeKind::ComponentNormal);
  EXPECT_EQ(c.scheme.sigma, 0.05);
  EXPECT_EQ(c.model.boundary, Boundary::Dirichlet);
}

TEST(Config, LaterAssignmentWins) {
  RunConfig c;
  apply_text(c, "w = 1\n");
  apply_assignment(c, "w=3");
  EXPECT_EQ(c.model.w, 3.0);
}

TEST(Config, BornProbabilitySetsBeta2Squared) {
  RunConfig c;
  apply_assignment(c, "born_probability=0.4");
  EXPECT_NEAR(c.model.born_probability(), 0.4, 1e-15);
}

TEST(Config, UnknownKeyIsConfigError) {
  RunConfig c;
  try {
    apply_text(c, "q = 5\nheigth = 3\n");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Config, MalformedValuesRejected) {
  RunConfig c;
  EXPECT_THROW(apply_assignment(c, "w=abc"), Error);
  EXPECT_THROW(apply_assignment(c, "w=1.5x"), Error);
  EXPECT_THROW(apply_assignment(c, "steps=-3"), Error);
  EXPECT_THROW(apply_assignment(c, "method=euler"), Error);
  EXPECT_THROW(apply_assignment(c, "no equals sign"), Error);
  EXPECT_THROW(apply_assignment(c, "beta_ratio=0"), Error);
}

TEST(Config, ScanPairs) {
  RunConfig c;
  apply_assignment(c, "scan_pairs = 5:1, 7:1,9:10");
  ASSERT_EQ(c.scan_pairs.size(), 3u);
  EXPECT_EQ(c.scan_pairs[0], (ScanPair{5, 1.0}));
  EXPECT_EQ(c.scan_pairs[2], (ScanPair{9, 10.0}));
  apply_assignment(c, "scan_pairs =");
  EXPECT_TRUE(c.scan_pairs.empty());
  EXPECT_THROW(apply_assignment(c, "scan_pairs = 5"), Error);
}

TEST(Config, ValidateRejectsBadModel) {
  RunConfig c;
  c.model.q = 0;
  EXPECT_THROW(c.validate(), Error);
  c = RunConfig{};
  c.command = Command::Table;
  c.reps = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, CanonicalRoundTripIsExact) {
  RunConfig c;
  apply_text(c, "q=7\nw=2.15\nbeta_ratio=1.2\nscheme=unitary\ndelta=0.05\nseed=42\nscan_pairs=5:1,9:10\n");
  RunConfig d;
  apply_text(d, canonical_text(c));
  EXPECT_EQ(canonical_text(c), canonical_text(d));
  EXPECT_EQ(c.model.beta1, d.model.beta1);
  EXPECT_EQ(c.model.beta2, d.model.beta2);
  EXPECT_EQ(config_hash(c), config_hash(d));
}

TEST(Config, HashSensitiveToResultKeysOnly) {
  RunConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.jobs = 8;
  b.out = "x.csv";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.scheme.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
  b = a;
  b.model.w = std::nextafter(a.model.w, 1.0);
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, Fnv1aKnownVectors) {
  // Published FNV-1a 64 test vectors.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Config, MetadataLineReproducesConfig) {
  RunConfig c;
  c.command = Command::Table;
  apply_text(c, "born_probability=0.4\nscheme=norm\nsigma=0.05\nseed=7\nreps=50\n");
  const std::string line = metadata_line(c);
  EXPECT_TRUE(line.starts_with("# nlqm table config_hash=" + config_hash(c) + " seed=7"));
  const RunConfig back = config_from_metadata(line);
  EXPECT_EQ(back.command, Command::Table);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, MetadataWithEmptyPairs) {
  RunConfig c;
  c.command = Command::Scan;
  const RunConfig back = config_from_metadata(metadata_line(c));
  EXPECT_TRUE(back.scan_pairs.empty());
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, MissingFileIsIoError) {
  RunConfig c;
  try {
    load_file(c, "/nonexistent/cfg.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}
