#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mpm/data/dataset_io.hpp"
#include "mpm/data/split.hpp"
#include "mpm/data/synth.hpp"
#include "mpm/data/window.hpp"
#include "mpm/errors.hpp"
#include "mpm/pose/skeleton.hpp"

using namespace mpm;
using namespace mpm::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mpm_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

SequenceRecord plain_record(int frames, int subject = 1) {
  SequenceRecord r;
  r.id = "r" + std::to_string(frames);
  r.subject = subject;
  r.pose3d = pose::PoseSequence(frames, 16, 3);
  for (int t = 0; t < frames; ++t) r.pose3d->at(t, 0, 0) = t;
  return r;
}

}  // namespace

TEST_CASE("synthetic bone lengths are constant") {
  SynthSpec spec;
  spec.n_sequences = 12;
  spec.seed = 3;
  const auto& sk = pose::Skeleton::standard();
  for (const auto& r : synth_generate(spec)) {
    REQUIRE(r.paired());
    for (const auto& [c, p] : sk.bones()) {
      const double first = (r.pose3d->point3(0, c) - r.pose3d->point3(0, p)).norm();
      for (int t = 1; t < r.frames(); ++t) {
        CHECK(std::abs((r.pose3d->point3(t, c) - r.pose3d->point3(t, p)).norm() - first) < 1e-6);
      }
    }
  }
}

TEST_CASE("idle sway moves slowly") {
  SynthSpec spec;
  spec.families = {MotionFamily::kIdleSway};
  spec.n_sequences = 20;
  spec.length = 120;
  spec.seed = 4;
  double worst = 0.0;
  for (const auto& r : synth_generate(spec)) {
    for (int t = 1; t < r.frames(); ++t)
      for (int j = 0; j < 16; ++j) worst = std::max(worst, (r.pose3d->point3(t, j) - r.pose3d->point3(t - 1, j)).norm());
  }
  CHECK(worst < 30.0);
}

TEST_CASE("2D is the projection of 3D") {
  SynthSpec spec;
  spec.n_sequences = 8;
  spec.seed = 5;
  for (const auto& r : synth_generate(spec)) {
    const auto p = reproject(r);
    REQUIRE(p.frames() == r.pose2d->frames());
    for (size_t i = 0; i < p.data().size(); ++i) CHECK(std::abs(p.data()[i] - r.pose2d->data()[i]) < 1e-6);
    CHECK(r.pose3d->point3(0, 0).norm() == 0.0);
  }
}

TEST_CASE("synthesis is deterministic and prefix stable") {
  SynthSpec spec;
  spec.n_sequences = 6;
  spec.seed = 9;
  spec.noise_sigma_mm = 5.0;
  const fs::path a = scratch_dir("synth_a"), b = scratch_dir("synth_b");
  write_dataset(a, synth_generate(spec));
  write_dataset(b, synth_generate(spec));
  for (const auto& e : fs::directory_iterator(a)) {
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
  auto big = spec;
  big.n_sequences = 10;
  const auto small_set = synth_generate(spec);
  const auto big_set = synth_generate(big);
  for (size_t i = 0; i < small_set.size(); ++i) CHECK(small_set[i].pose3d == big_set[i].pose3d);

  const auto subsets = scaled_subsets(big, 2, {1, 2, 4});
  CHECK(subsets[0].size() == 2);
  CHECK(subsets[2].size() == 8);
  CHECK(subsets[1][1].pose2d == subsets[2][1].pose2d);

  auto bad = spec;
  bad.noise_sigma_mm = -1;
  CHECK_THROWS_AS(synth_generate(bad), ValidationError);
}

TEST_CASE("dataset round trip") {
  SynthSpec spec;
  spec.n_sequences = 5;
  spec.seed = 1;
  auto records = synth_generate(spec);
  records[1].pose2d.reset();
  records[1].root_camera.reset();
  records[2].pose3d.reset();
  records[2].root_camera.reset();
  const fs::path dir = scratch_dir("io");
  write_dataset(dir, records);
  const auto back = read_dataset(dir);
  REQUIRE(back.size() == records.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == records[i].id);
    CHECK(back[i].subject == records[i].subject);
    CHECK(back[i].camera == records[i].camera);
    CHECK(back[i].has_2d() == records[i].has_2d());
    CHECK(back[i].has_3d() == records[i].has_3d());
    if (back[i].has_3d()) {
      for (size_t k = 0; k < back[i].pose3d->data().size(); ++k) {
        CHECK(back[i].pose3d->data()[k] == static_cast<double>(static_cast<float>(records[i].pose3d->data()[k])));
      }
    }
  }
  // Reading and writing again is byte-stable.
  const fs::path again = scratch_dir("io_again");
  write_dataset(again, back);
  CHECK(slurp(dir / "manifest.json") == slurp(again / "manifest.json"));
}

TEST_CASE("dataset errors carry codes") {
  SynthSpec spec;
  spec.n_sequences = 2;
  const fs::path dir = scratch_dir("errors");
  write_dataset(dir, synth_generate(spec));
  auto code_of = [](const fs::path& d) {
    try {
      read_dataset(d);
    } catch (const DataFormatError& e) {
      return e.code();
    }
    FAIL("expected DataFormatError");
    return DataErrorCode::kIo;
  };
  CHECK(code_of(dir / "nowhere") == DataErrorCode::kIo);

  const std::string manifest = slurp(dir / "manifest.json");
  std::ofstream(dir / "manifest.json", std::ios::trunc) << "{ not json";
  CHECK(code_of(dir) == DataErrorCode::kCorruptHeader);

  std::string v = manifest;
  v.replace(v.find("mpm-data/1"), 10, "mpm-data/2");
  std::ofstream(dir / "manifest.json", std::ios::trunc) << v;
  CHECK(code_of(dir) == DataErrorCode::kVersionMismatch);

  std::ofstream(dir / "manifest.json", std::ios::trunc) << manifest;
  const std::string payload = slurp(dir / "rec_000000_3d.bin");
  std::ofstream(dir / "rec_000000_3d.bin", std::ios::binary | std::ios::trunc) << payload.substr(0, 100);
  CHECK(code_of(dir) == DataErrorCode::kCorruptContainer);
  std::ofstream(dir / "rec_000000_3d.bin", std::ios::binary | std::ios::trunc) << payload << "extra";
  CHECK(code_of(dir) == DataErrorCode::kShapeMismatch);
  std::ofstream(dir / "rec_000000_3d.bin", std::ios::binary | std::ios::trunc) << payload;
  CHECK_NOTHROW(read_dataset(dir));
}

TEST_CASE("window examples") {
  const auto r243 = plain_record(243);
  CHECK(window(r243, 0, WindowOptions{243, 1, false, TailPolicy::kDrop}).size() == 1);

  const auto r300 = plain_record(300);
  const auto drop = window(r300, 0, WindowOptions{81, 81, false, TailPolicy::kDrop});
  REQUIRE(drop.size() == 3);
  CHECK(drop[0].pose3d->at(0, 0, 0) == 0);
  CHECK(drop[1].pose3d->at(0, 0, 0) == 81);
  CHECK(drop[2].pose3d->at(0, 0, 0) == 162);
  CHECK(drop[1].middle == 40);
  CHECK(drop[1].source_frame == 121);
  const auto align = window(r300, 0, WindowOptions{81, 81, false, TailPolicy::kAlignEnd});
  REQUIRE(align.size() == 4);
  CHECK(align[3].pose3d->at(0, 0, 0) == 219);
  CHECK(align[3].pose3d->at(80, 0, 0) == 299);

  CHECK(window(plain_record(50), 0, WindowOptions{81, 1, false, TailPolicy::kDrop}).empty());
}

TEST_CASE("padded windows replicate edges") {
  const auto r = plain_record(10);
  const auto w = padded_window(*r.pose3d, 9, 1);
  REQUIRE(w.frames() == 9);
  const double expect[9] = {0, 0, 0, 0, 1, 2, 3, 4, 5};
  for (int t = 0; t < 9; ++t) CHECK(w.at(t, 0, 0) == expect[t]);
  const auto all = window(r, 0, WindowOptions{9, 1, true, TailPolicy::kDrop});
  REQUIRE(all.size() == 10);
  for (int c = 0; c < 10; ++c) {
    CHECK(all[c].pose3d->at(all[c].middle, 0, 0) == c);
    CHECK(all[c].source_frame == c);
  }
}

TEST_CASE("subject split") {
  SynthSpec spec;
  spec.n_sequences = 40;
  const auto records = synth_generate(spec);
  const auto s = split_by_subject(records);
  CHECK(s.train.size() + s.val.size() == records.size());
  for (const auto& r : s.train) CHECK(r.subject <= 5);
  for (const auto& r : s.val) CHECK(r.subject >= 6);
  CHECK_THROWS_AS(require_disjoint(SubjectSplit{{1, 2}, {2, 3}}), ValidationError);

  const auto few = few_shot_subset(s.train, 0.25, {1}, 3);
  CHECK(!few.empty());
  for (const auto& r : few) CHECK(r.subject == 1);
  CHECK(few_shot_subset(s.train, 0.25, {1}, 3).size() == few.size());
  CHECK(few_shot_subset(s.train, 0.001, {}, 3).size() == 1);
  CHECK(few_shot_subset(s.train, 1.0, {}, 3).size() == s.train.size());
}
