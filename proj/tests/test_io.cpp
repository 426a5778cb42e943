#include <catch2/catch_amalgamated.hpp>

#include <hdf5.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "pfm/cases.hpp"
#include "pfm/io.hpp"

using namespace pfm;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "pfm_io_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

template <class F>
IoError::Kind io_kind(F&& f) {
  try {
    f();
  } catch (const IoError& e) {
    return e.kind;
  }
  FAIL("expected IoError");
  return IoError::Kind::Malformed;
}

void h5_delete_link(const fs::path& path, const char* link) {
  const hid_t f = H5Fopen(path.string().c_str(), H5F_ACC_RDWR, H5P_DEFAULT);
  REQUIRE(f >= 0);
  REQUIRE(H5Ldelete(f, link, H5P_DEFAULT) >= 0);
  REQUIRE(H5Fclose(f) >= 0);
}

nlohmann::json load_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  nlohmann::json j;
  in >> j;
  return j;
}

void store_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream out(p);
  out << j.dump(2) << '\n';
}

SampleFile make_sample() {
  SampleFile s;
  SampleAttributes& a = s.attrs;
  a.seed = 42;
  a.bc = "tension";
  a.decomposition = "spect";
  a.cracks = {{0.3, 1.0 / 3.0, 0.7853981633974483, 0.25}, {0.6, 0.55, 2.1, 0.25}};
  a.n_cracks = 2;
  a.E = 1e6;
  a.nu = 0.3;
  a.Gc = 1.0;
  a.l0 = 0.01;
  a.gamma_star = 5.0;
  a.k_res = 1e-10;
  a.nx = 4;
  a.ny = 3;
  a.Lx = 1.0;
  a.Ly = 1.0;
  a.schedule = {1e-5, 2e-5};
  a.prng = Rng64::kId;
  a.stag_tol = 1e-4;
  a.lin_rtol = 1e-10;
  a.max_stag_iters = 200;
  a.preconditioner = "ic0";

  ExtraAttr note;
  note.kind = ExtraAttr::Kind::Text;
  note.text = "pilot run";
  a.extra["note"] = note;
  ExtraAttr peak;
  peak.kind = ExtraAttr::Kind::Float64;
  peak.f64 = {123.456};
  a.extra["peak_force"] = peak;
  ExtraAttr weights;
  weights.kind = ExtraAttr::Kind::Float64;
  weights.dims = {3};
  weights.f64 = {0.1, 0.2, 0.3};
  a.extra["weights"] = weights;
  ExtraAttr tags;
  tags.kind = ExtraAttr::Kind::Int64;
  tags.dims = {2};
  tags.i64 = {-3, 9};
  a.extra["tags"] = tags;
  ExtraAttr hashes;
  hashes.kind = ExtraAttr::Kind::Uint64;
  hashes.dims = {2};
  hashes.u64 = {UINT64_MAX, 1};
  a.extra["hashes"] = hashes;

  for (int step = 0; step < 2; ++step) {
    FieldGrid phase = FieldGrid::zeros(a.ny + 1, a.nx + 1);
    FieldGrid ux = phase, uy = phase;
    for (int r = 0; r < phase.rows; ++r)
      for (int c = 0; c < phase.cols; ++c) {
        phase.at(r, c) = step + r * 0.31 + c * 0.07 + 1.0 / 3.0;
        ux.at(r, c) = -step + r * 0.011 - c * 0.002;
        uy.at(r, c) = step * 1e-5 + r * c * 1e-7;
      }
    s.phase.push_back(phase);
    s.ux.push_back(ux);
    s.uy.push_back(uy);
  }
  s.displacement = {1e-5, 2e-5};
  s.force = {0.32, 0.71};
  return s;
}

void check_equal(const SampleFile& got, const SampleFile& want) {
  const SampleAttributes &a = got.attrs, &b = want.attrs;
  CHECK(a.seed == b.seed);
  CHECK(a.bc == b.bc);
  CHECK(a.decomposition == b.decomposition);
  CHECK(a.n_cracks == b.n_cracks);
  REQUIRE(a.cracks.size() == b.cracks.size());
  for (std::size_t i = 0; i < a.cracks.size(); ++i) {
    CHECK(a.cracks[i].cx == b.cracks[i].cx);
    CHECK(a.cracks[i].cy == b.cracks[i].cy);
    CHECK(a.cracks[i].theta == b.cracks[i].theta);
    CHECK(a.cracks[i].length == b.cracks[i].length);
  }
  CHECK(a.E == b.E);
  CHECK(a.nu == b.nu);
  CHECK(a.Gc == b.Gc);
  CHECK(a.l0 == b.l0);
  CHECK(a.gamma_star == b.gamma_star);
  CHECK(a.k_res == b.k_res);
  CHECK(a.nx == b.nx);
  CHECK(a.ny == b.ny);
  CHECK(a.Lx == b.Lx);
  CHECK(a.Ly == b.Ly);
  CHECK(a.schedule == b.schedule);
  CHECK(a.prng == b.prng);
  CHECK(a.stag_tol == b.stag_tol);
  CHECK(a.lin_rtol == b.lin_rtol);
  CHECK(a.max_stag_iters == b.max_stag_iters);
  CHECK(a.preconditioner == b.preconditioner);
  CHECK(a.format_version == b.format_version);
  CHECK(a.extra == b.extra);

  REQUIRE(got.phase.size() == want.phase.size());
  for (std::size_t s = 0; s < got.phase.size(); ++s) {
    CHECK(got.phase[s].values == want.phase[s].values);
    CHECK(got.ux[s].values == want.ux[s].values);
    CHECK(got.uy[s].values == want.uy[s].values);
    CHECK(got.phase[s].rows == want.phase[s].rows);
    CHECK(got.phase[s].cols == want.phase[s].cols);
  }
  CHECK(got.displacement == want.displacement);
  CHECK(got.force == want.force);
}

}  // namespace

TEST_CASE("nodal values reshape to a row-major field") {
  StructuredGrid g(3, 2, 1.0, 1.0);
  std::vector<double> nodal(g.node_count());
  for (std::size_t i = 0; i < nodal.size(); ++i) nodal[i] = static_cast<double>(i);
  const FieldGrid f = field_from_nodal(g, nodal);
  CHECK(f.rows == 3);
  CHECK(f.cols == 4);
  for (int r = 0; r < f.rows; ++r)
    for (int c = 0; c < f.cols; ++c) CHECK(f.at(r, c) == static_cast<double>(g.node_index(c, r)));

  nodal.pop_back();
  CHECK_THROWS_AS(field_from_nodal(g, nodal), std::invalid_argument);
}

TEST_CASE("downsampling reproduces linear fields at target cell centers") {
  FieldGrid src = FieldGrid::zeros(41, 33);
  const double a = 0.2, bx = 1.7, by = -0.9;
  for (int r = 0; r < src.rows; ++r)
    for (int c = 0; c < src.cols; ++c)
      src.at(r, c) = a + bx * c / (src.cols - 1.0) + by * r / (src.rows - 1.0);

  const FieldGrid out = downsample(src, 8, 5);
  REQUIRE(out.rows == 8);
  REQUIRE(out.cols == 5);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) {
      const double want = a + bx * (c + 0.5) / out.cols + by * (r + 0.5) / out.rows;
      CHECK(out.at(r, c) == Catch::Approx(want).margin(1e-12));
    }

  FieldGrid flat = FieldGrid::zeros(10, 10);
  for (double& v : flat.values) v = 3.25;
  const FieldGrid fout = downsample(flat, 3, 7);
  for (double v : fout.values) CHECK(v == 3.25);

  CHECK_THROWS_AS(downsample(src, 50, 5), std::invalid_argument);
  CHECK_THROWS_AS(downsample(src, 0, 5), std::invalid_argument);
  CHECK_THROWS_AS(downsample(FieldGrid::zeros(1, 5), 1, 1), std::invalid_argument);
}

TEST_CASE("curve csv roundtrips doubles exactly") {
  const fs::path path = test_dir() / "curve.csv";
  const std::vector<double> d = {0.0, 1.0 / 3.0, 1e-300, 2.5e17};
  const std::vector<double> f = {-0.0, -7.125, 3.141592653589793, 1e-17};
  export_curve(d, f, path.string());

  const Curve c = read_curve(path.string());
  CHECK(c.displacement == d);
  CHECK(c.force == f);

  std::vector<double> short_force = {1.0};
  CHECK_THROWS_AS(export_curve(d, short_force, (test_dir() / "bad.csv").string()),
                  std::invalid_argument);

  const fs::path bad_header = test_dir() / "bad_header.csv";
  std::ofstream(bad_header) << "displacement,force\n0,1\n";
  CHECK(io_kind([&] { read_curve(bad_header.string()); }) == IoError::Kind::Malformed);

  const fs::path bad_row = test_dir() / "bad_row.csv";
  std::ofstream(bad_row) << "displacement_mm,force_N\n0.1,abc\n";
  CHECK(io_kind([&] { read_curve(bad_row.string()); }) == IoError::Kind::Malformed);

  CHECK(io_kind([&] { read_curve((test_dir() / "absent.csv").string()); }) ==
        IoError::Kind::Malformed);
}

TEST_CASE("hdf5 samples roundtrip and rewrite byte-identically") {
  const SampleFile s = make_sample();
  const fs::path p1 = test_dir() / "sample_a.h5";
  const fs::path p2 = test_dir() / "sample_b.h5";
  write_sample(p1.string(), s);
  write_sample(p2.string(), s);

  check_equal(read_sample(p1.string()), s);
  CHECK(file_bytes(p1) == file_bytes(p2));
}

TEST_CASE("pfb samples roundtrip with a json sidecar") {
  const SampleFile s = make_sample();
  const fs::path p1 = test_dir() / "sample_a.pfb";
  const fs::path p2 = test_dir() / "sample_b.pfb";
  write_sample(p1.string(), s);
  write_sample(p2.string(), s);

  REQUIRE(fs::exists(p1));
  REQUIRE(fs::exists(fs::path(p1.string() + ".json")));
  check_equal(read_sample(p1.string()), s);
  CHECK(file_bytes(p1) == file_bytes(p2));
  CHECK(file_bytes(p1.string() + ".json") == file_bytes(p2.string() + ".json"));
}

TEST_CASE("both sample formats store identical content") {
  const SampleFile s = make_sample();
  const fs::path ph = test_dir() / "cross.h5";
  const fs::path pb = test_dir() / "cross.pfb";
  write_sample(ph.string(), s);
  write_sample(pb.string(), s);
  check_equal(read_sample(ph.string()), read_sample(pb.string()));
}

TEST_CASE("write_sample validates inputs") {
  SampleFile s = make_sample();
  s.force.pop_back();
  CHECK_THROWS_AS(write_sample((test_dir() / "bad.h5").string(), s),
                  std::invalid_argument);
  CHECK_THROWS_AS(write_sample((test_dir() / "bad.csv").string(), make_sample()),
                  std::invalid_argument);
  CHECK_THROWS_AS(read_sample((test_dir() / "bad.csv").string()), std::invalid_argument);
}

TEST_CASE("hdf5 error taxonomy distinguishes damage kinds") {
  const SampleFile s = make_sample();

  const fs::path garbled = test_dir() / "garbled.h5";
  std::ofstream(garbled) << "this is not an hdf5 file";
  CHECK(io_kind([&] { read_sample(garbled.string()); }) == IoError::Kind::Malformed);
  CHECK(io_kind([&] { read_field(garbled.string()); }) == IoError::Kind::Malformed);
  CHECK(io_kind([&] { read_phase_field(garbled.string()); }) == IoError::Kind::Malformed);

  const fs::path no_force = test_dir() / "no_force.h5";
  write_sample(no_force.string(), s);
  h5_delete_link(no_force, "/curves/force");
  CHECK(io_kind([&] { read_sample(no_force.string()); }) == IoError::Kind::Malformed);

  const fs::path no_step = test_dir() / "no_step.h5";
  write_sample(no_step.string(), s);
  h5_delete_link(no_step, "/fields/phase/step_0001");
  CHECK(io_kind([&] { read_sample(no_step.string()); }) == IoError::Kind::Truncated);

  const fs::path vnext = test_dir() / "vnext.h5";
  SampleFile future = make_sample();
  future.attrs.format_version = 2;
  write_sample(vnext.string(), future);
  CHECK(io_kind([&] { read_sample(vnext.string()); }) == IoError::Kind::VersionMismatch);
}

TEST_CASE("pfb error taxonomy distinguishes damage kinds") {
  const SampleFile s = make_sample();

  const fs::path cut = test_dir() / "cut.pfb";
  write_sample(cut.string(), s);
  fs::resize_file(cut, fs::file_size(cut) - 8);
  CHECK(io_kind([&] { read_sample(cut.string()); }) == IoError::Kind::Truncated);

  const fs::path orphan = test_dir() / "orphan.pfb";
  write_sample(orphan.string(), s);
  fs::remove(fs::path(orphan.string() + ".json"));
  CHECK(io_kind([&] { read_sample(orphan.string()); }) == IoError::Kind::Malformed);

  const fs::path scrambled = test_dir() / "scrambled.pfb";
  write_sample(scrambled.string(), s);
  std::ofstream(scrambled.string() + ".json") << "{ not json";
  CHECK(io_kind([&] { read_sample(scrambled.string()); }) == IoError::Kind::Malformed);

  const fs::path keyless = test_dir() / "keyless.pfb";
  write_sample(keyless.string(), s);
  nlohmann::json j = load_json(keyless.string() + ".json");
  j.erase("seed");
  store_json(keyless.string() + ".json", j);
  CHECK(io_kind([&] { read_sample(keyless.string()); }) == IoError::Kind::Malformed);

  const fs::path vnext = test_dir() / "vnext.pfb";
  write_sample(vnext.string(), s);
  j = load_json(vnext.string() + ".json");
  j["format_version"] = 2;
  store_json(vnext.string() + ".json", j);
  CHECK(io_kind([&] { read_sample(vnext.string()); }) == IoError::Kind::VersionMismatch);
}

TEST_CASE("standalone field files roundtrip in both formats") {
  FieldGrid f = FieldGrid::zeros(5, 7);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = 0.01 * i - 0.17;

  for (const char* name : {"field.h5", "field.pfb"}) {
    const fs::path p = test_dir() / name;
    write_field(p.string(), f);
    const FieldGrid back = read_field(p.string());
    CHECK(back.rows == f.rows);
    CHECK(back.cols == f.cols);
    CHECK(back.values == f.values);

    const FieldGrid phase = read_phase_field(p.string());
    CHECK(phase.values == f.values);
  }

  const fs::path cut = test_dir() / "field_cut.pfb";
  write_field(cut.string(), f);
  fs::resize_file(cut, fs::file_size(cut) - 8);
  CHECK(io_kind([&] { read_field(cut.string()); }) == IoError::Kind::Truncated);

  const fs::path vnext = test_dir() / "field_vnext.pfb";
  write_field(vnext.string(), f);
  nlohmann::json j = load_json(vnext.string() + ".json");
  j["format_version"] = 2;
  store_json(vnext.string() + ".json", j);
  CHECK(io_kind([&] { read_field(vnext.string()); }) == IoError::Kind::VersionMismatch);

  CHECK_THROWS_AS(write_field((test_dir() / "field.csv").string(), f), std::invalid_argument);
  CHECK_THROWS_AS(read_field((test_dir() / "field.csv").string()), std::invalid_argument);
  CHECK_THROWS_AS(read_phase_field((test_dir() / "field.csv").string()), std::invalid_argument);
}

TEST_CASE("read_phase_field returns the final step of a sample") {
  const SampleFile s = make_sample();
  for (const char* name : {"final.h5", "final.pfb"}) {
    const fs::path p = test_dir() / name;
    write_sample(p.string(), s);
    const FieldGrid last = read_phase_field(p.string());
    CHECK(last.values == s.phase.back().values);
    CHECK(last.rows == s.phase.back().rows);
  }
}

TEST_CASE("attributes derived from a scenario cover the solver and sampling state") {
  const double margin = default_margin(kDatasetCrackLength, 0.01);
  const SampleSpec sample = sample_cracks(7, 1.0, 1.0, margin);
  const ScenarioSpec sc = build_scenario(BcKind::BiaxialDataset, DecompKind::StarConvex, 64, &sample);
  const SolverConfig config;
  const SampleAttributes a = attributes_for(sc, config, sample.seed);

  CHECK(a.seed == 7);
  CHECK(a.bc == "tension");
  CHECK(a.decomposition == "starconvex");
  CHECK(a.n_cracks == sample.n_cracks);
  CHECK(a.cracks.size() == sample.cracks.size());
  CHECK(a.E == sc.material.E);
  CHECK(a.l0 == sc.material.l0);
  CHECK(a.nx == 64);
  CHECK(a.schedule == sc.schedule.values);
  CHECK(a.prng == std::string(Rng64::kId));
  CHECK(a.preconditioner == "ic0");
  CHECK(parse_precon(a.preconditioner) == config.preconditioner);
  CHECK_THROWS_AS(parse_precon("ilu"), std::invalid_argument);
}
