#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "softaug/dataset.hpp"
#include "softaug/errors.hpp"
#include "softaug/manifest.hpp"
#include "softaug/robustness.hpp"
#include "support/generators.hpp"

using namespace softaug;
using softaug::testing::random_image;
using softaug::testing::random_samples;
using softaug::testing::TempDir;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::filesystem::path kDataDir{SOFTAUG_DATA_DIR};

}  // namespace

TEST(Cifar, TwoRecordFixture) {
  TempDir dir("cifar");
  // Record 0: label 7, R plane = 1, G plane = 2, B plane = 3, except pixel (1,0) whose R is 200.
  // Record 1: label 2, every byte i of each plane is i % 256 (plane offset 0, 1, 2).
  std::vector<std::uint8_t> bytes;
  bytes.push_back(7);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 1024; ++i) bytes.push_back(static_cast<std::uint8_t>(c + 1));
  bytes[1 + 1] = 200;
  bytes.push_back(2);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 1024; ++i) bytes.push_back(static_cast<std::uint8_t>((i + c) % 256));
  write_bytes(dir.path() / "b.bin", bytes);

  const auto ds = load_cifar(dir.path() / "b.bin", CifarVariant::Cifar10);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.class_count(), 10);
  const auto s0 = ds.sample(0);
  EXPECT_EQ(s0.label, 7);
  EXPECT_EQ(s0.image.at(0, 0, 0), 1);
  EXPECT_EQ(s0.image.at(1, 0, 0), 200);
  EXPECT_EQ(s0.image.at(5, 9, 1), 2);
  EXPECT_EQ(s0.image.at(31, 31, 2), 3);
  const auto s1 = ds.sample(1);
  EXPECT_EQ(s1.label, 2);
  EXPECT_EQ(s1.image.at(3, 1, 0), (32 + 3) % 256);
  EXPECT_EQ(s1.image.at(3, 1, 2), (32 + 3 + 2) % 256);
  EXPECT_EQ(ds.describe(1), (dir.path() / "b.bin").string() + ":1");
  EXPECT_EQ(ds.class_name(7), "horse");
}

TEST(Cifar, EmptyAndMalformedFiles) {
  TempDir dir("cifar-bad");
  write_bytes(dir.path() / "empty.bin", {});
  EXPECT_EQ(load_cifar(dir.path() / "empty.bin", CifarVariant::Cifar10).size(), 0u);

  write_bytes(dir.path() / "short.bin", std::vector<std::uint8_t>(3073 + 100, 1));
  try {
    load_cifar(dir.path() / "short.bin", CifarVariant::Cifar10);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.location(), 3073u);
  }

  std::vector<std::uint8_t> bad_label(3073, 0);
  bad_label[0] = 10;
  write_bytes(dir.path() / "label.bin", bad_label);
  EXPECT_THROW(load_cifar(dir.path() / "label.bin", CifarVariant::Cifar10), FormatError);
  EXPECT_THROW(load_cifar(dir.path() / "missing.bin", CifarVariant::Cifar10), IoError);
}

TEST(Cifar, HundredUsesFineLabel) {
  TempDir dir("cifar100");
  std::vector<std::uint8_t> bytes(3074, 0);
  bytes[0] = 4;   // coarse
  bytes[1] = 87;  // fine
  write_bytes(dir.path() / "c.bin", bytes);
  const auto ds = load_cifar(dir.path() / "c.bin", CifarVariant::Cifar100);
  EXPECT_EQ(ds.class_count(), 100);
  EXPECT_EQ(ds.sample(0).label, 87);
}

TEST(Cifar, WriteLoadRoundTrip) {
  TempDir dir("cifar-rt");
  std::mt19937_64 gen(1);
  for (const auto variant : {CifarVariant::Cifar10, CifarVariant::Cifar100}) {
    const int classes = variant == CifarVariant::Cifar10 ? 10 : 100;
    const auto samples = random_samples(gen, 30, classes);
    write_cifar(dir.path() / "a.bin", std::span(samples).first(17), variant);
    write_cifar(dir.path() / "b.bin", std::span(samples).subspan(17), variant);
    const std::vector<std::filesystem::path> files{dir.path() / "a.bin", dir.path() / "b.bin"};
    const auto ds = load_cifar(files, variant);
    ASSERT_EQ(ds.size(), 30u);
    for (std::size_t i = 0; i < 30; ++i) {
      const auto s = ds.sample(i);
      ASSERT_EQ(s.image, samples[i].image);
      ASSERT_EQ(s.label, samples[i].label);
    }
  }
}

TEST(Folder, LoaderOrderingAndEmptyClass) {
  TempDir dir("folder");
  std::mt19937_64 gen(2);
  const Image cat = random_image(gen, 7, 5, 3);
  const Image dog = random_image(gen, 4, 6, 1);
  std::filesystem::create_directories(dir.path() / "dog");
  std::filesystem::create_directories(dir.path() / "cat" / "nested");
  std::filesystem::create_directories(dir.path() / "empty");
  write_png(dir.path() / "cat" / "nested" / "x.png", cat);
  write_png(dir.path() / "dog" / "b.png", dog);
  write_png(dir.path() / "dog" / "a.png", cat);

  const auto ds = load_image_folder(dir.path());
  EXPECT_EQ(ds.class_count(), 3);
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.class_name(0), "cat");
  EXPECT_EQ(ds.class_name(1), "dog");
  EXPECT_EQ(ds.class_name(2), "empty");
  EXPECT_EQ(ds.sample(0).image, cat);
  EXPECT_EQ(ds.sample(0).label, 0);
  EXPECT_EQ(ds.sample(1).image, cat);  // dog/a.png sorts first
  EXPECT_EQ(ds.sample(2).image, dog);
  EXPECT_EQ(ds.sample(2).label, 1);

  const auto again = load_image_folder(dir.path());
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(again.describe(i), ds.describe(i));

  std::ofstream(dir.path() / "dog" / "c.png") << "not an image";
  const auto broken = load_image_folder(dir.path());
  EXPECT_THROW(broken.sample(3), FormatError);
}

TEST(Png, RoundTrip) {
  TempDir dir("png");
  std::mt19937_64 gen(3);
  for (const int c : {1, 3}) {
    const Image img = random_image(gen, 13, 9, c);
    write_png(dir.path() / "p.png", img);
    EXPECT_EQ(read_image(dir.path() / "p.png"), img);
  }
}

TEST(Manifest, RoundTripPreservesFields) {
  TempDir dir("manifest");
  std::mt19937_64 gen(4);
  const auto samples = random_samples(gen, 40, 10);
  const Pipeline pipeline({{RandomCropStage{}, true}, {TrivialAugmentStage{}, true}, {RandomEraseStage{}, true},
                           {PatchGaussianStage{}, true}, {HorizontalFlipStage{}, false}},
                          load_mapping_profile("poly-chance", 10, kDataDir), {true, false});
  std::vector<AugmentationRecord> written;
  {
    ManifestWriter writer(dir.path(), Json{{"note", "test"}});
    EXPECT_TRUE(std::filesystem::exists(dir.path() / kIncompleteMarker));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto [img, record] = pipeline.run(samples[i].image, samples[i].label, 5, i);
      writer.write(img, record);
      written.push_back(record);
    }
    writer.finish();
  }
  EXPECT_FALSE(std::filesystem::exists(dir.path() / kIncompleteMarker));
  const auto manifest = read_manifest(dir.path() / kManifestFile);
  EXPECT_EQ(manifest.header["note"], "test");
  ASSERT_EQ(manifest.entries.size(), written.size());
  for (std::size_t i = 0; i < written.size(); ++i) {
    const auto& a = written[i];
    const auto& b = manifest.entries[i].record;
    EXPECT_EQ(a.sample_id, b.sample_id);
    EXPECT_EQ(a.composed_confidence, b.composed_confidence);
    EXPECT_EQ(a.loss_weight, b.loss_weight);
    EXPECT_EQ(a.global_seed, b.global_seed);
    ASSERT_EQ(a.stages.size(), b.stages.size());
    for (std::size_t s = 0; s < a.stages.size(); ++s) {
      EXPECT_EQ(a.stages[s].spec.phi, b.stages[s].spec.phi);
      EXPECT_EQ(a.stages[s].confidence, b.stages[s].confidence);
      EXPECT_EQ(spec_to_json(a.stages[s].spec), spec_to_json(b.stages[s].spec));
    }
    const auto da = a.soft_label.dense(), db = b.soft_label.dense();
    for (std::size_t k = 0; k < da.size(); ++k) EXPECT_NEAR(da[k], db[k], 1e-9);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / manifest.entries[i].image_path));
  }
  // Re-serializing a parsed record gives the same line.
  const auto lines = slurp(dir.path() / kManifestFile);
  const auto second_line = lines.substr(lines.find('\n') + 1, lines.find('\n', lines.find('\n') + 1) - lines.find('\n') - 1);
  EXPECT_EQ(record_to_json(manifest.entries[0].record, manifest.entries[0].image_path).dump(), second_line);
}

TEST(Manifest, EmptyAndIdentity) {
  TempDir dir("manifest-empty");
  {
    ManifestWriter writer(dir.path() / "a");
    writer.finish();
  }
  EXPECT_TRUE(read_manifest(dir.path() / "a" / kManifestFile).entries.empty());

  {
    ManifestWriter writer(dir.path() / "b");
    const auto record = assemble_record({}, 3, 10);
    writer.write(Image(32, 32, 3), record);
    writer.finish();
  }
  const auto m = read_manifest(dir.path() / "b" / kManifestFile);
  ASSERT_EQ(m.entries.size(), 1u);
  EXPECT_EQ(m.entries[0].record.soft_label.confidence, 1.0);
  EXPECT_EQ(m.entries[0].record.soft_label.off_target(), 0.0);
}

TEST(Manifest, MalformedInput) {
  TempDir dir("manifest-bad");
  std::ofstream(dir.path() / "m.jsonl") << R"({"format":"softaug-manifest","version":1})" << "\n{broken\n";
  try {
    read_manifest(dir.path() / "m.jsonl");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.location(), 2u);
  }
  std::ofstream(dir.path() / "n.jsonl") << R"({"hello":1})" << "\n";
  EXPECT_THROW(read_manifest(dir.path() / "n.jsonl"), FormatError);
}

TEST(Robustness, CellMeanExamples) {
  const auto all_right = parse_predictions(
      "sample_id,true_class,predicted_class,corruption_name,severity\n"
      "a,1,1,fog,2\nb,2,2,clean,0\n");
  EXPECT_EQ(eval_robustness(all_right).robustness, 1.0);

  const auto three_of_four = parse_predictions(
      "sample_id,true_class,predicted_class,corruption_name,severity\n"
      "a,1,1,fog,3\nb,2,2,fog,3\nc,3,3,fog,3\nd,4,0,fog,3\n");
  EXPECT_EQ(eval_robustness(three_of_four).robustness, 0.75);

  // Cells of size 1 (acc 1.0) and 4 (acc 0.5): cell mean 0.75, pooled 0.6.
  const auto rows = parse_predictions(
      "severity,corruption_name,predicted_class,true_class,sample_id,extra\n"
      "1,snow,1,1,a,x\n"
      "1,frost,1,1,b,x\n1,frost,2,2,c,x\n1,frost,0,3,d,x\n1,frost,0,4,e,x\n");
  const auto report = eval_robustness(rows);
  EXPECT_EQ(report.robustness, 0.75);
  EXPECT_DOUBLE_EQ(*report.pooled_robustness, 0.6);
  EXPECT_FALSE(report.clean_accuracy);
  EXPECT_EQ(report.per_corruption.at("frost"), 0.5);
  EXPECT_EQ(report.per_severity.at(1), 0.75);
}

TEST(Robustness, RowOrderAndDuplication) {
  std::mt19937_64 gen(5);
  const auto names = default_corruptions();
  std::vector<PredictionRow> rows;
  for (int i = 0; i < 400; ++i) {
    const bool clean = i % 10 == 0;
    rows.push_back({std::to_string(i), i % 7, static_cast<int>(gen() % 7),
                    clean ? std::string(kCleanCorruption) : std::string(names[gen() % 5]),
                    clean ? 0 : static_cast<int>(1 + gen() % 5)});
  }
  const auto base = report_to_json(eval_robustness(rows));
  auto shuffled = rows;
  std::shuffle(shuffled.begin(), shuffled.end(), gen);
  EXPECT_EQ(report_to_json(eval_robustness(shuffled)), base);

  auto doubled = rows;
  doubled.insert(doubled.end(), rows.begin(), rows.end());
  const auto r1 = eval_robustness(rows), r2 = eval_robustness(doubled);
  EXPECT_DOUBLE_EQ(*r1.robustness, *r2.robustness);
  EXPECT_DOUBLE_EQ(*r1.clean_accuracy, *r2.clean_accuracy);
}

TEST(Robustness, MalformedRows) {
  const std::string header = "sample_id,true_class,predicted_class,corruption_name,severity\n";
  auto line_of = [&](const std::string& body) -> std::uint64_t {
    try {
      parse_predictions(header + body);
    } catch (const FormatError& e) {
      return e.location();
    }
    return 0;
  };
  EXPECT_EQ(line_of("a,1,1,fog,1\nb,1,x,fog,1\n"), 3u);
  EXPECT_EQ(line_of("a,1,1,fog,6\n"), 2u);
  EXPECT_EQ(line_of("a,1,1,clean,2\n"), 2u);
  EXPECT_EQ(line_of("a,1,1,fog,0\n"), 2u);
  EXPECT_EQ(line_of("a,1,1\n"), 2u);
  EXPECT_THROW(parse_predictions("id,true\n"), FormatError);
  EXPECT_NO_THROW(parse_predictions(header + "a,1,1,my_blur,2\n"));
  EXPECT_EQ(default_corruptions().size(), 19u);
}

TEST(Robustness, FormatsPercentages) {
  const auto rows = parse_predictions(
      "sample_id,true_class,predicted_class,corruption_name,severity\n"
      "a,1,1,fog,3\nb,2,2,fog,3\nc,3,3,fog,3\nd,4,0,fog,3\n");
  const auto text = format_report(eval_robustness(rows));
  EXPECT_NE(text.find("75.00%"), std::string::npos) << text;
}
