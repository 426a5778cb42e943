#pragma once
// Sample files, standalone field files, curve CSVs and field downsampling.
//
// The primary container is HDF5: groups /fields/{phase,ux,uy}/step_%04d,
// datasets /curves/{displacement,force}, and root attributes carrying
// everything needed to re-run the sample. Object time tracking is disabled
// on every created object so identical data produces bitwise-identical
// files. A flat-binary fallback (.pfb: raw little-endian doubles plus a
// JSON sidecar at <path>.json) mirrors the same logical schema.

#include <hdf5.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfm/cases.hpp"
#include "pfm/history.hpp"
#include "pfm/mesh.hpp"
#include "pfm/solver.hpp"

namespace pfm {

struct FieldGrid {
  int rows = 0, cols = 0;
  std::vector<double> values;  // row-major: values[r*cols + c]

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }

  static FieldGrid zeros(int rows, int cols) {
    FieldGrid f;
    f.rows = rows;
    f.cols = cols;
    f.values.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    return f;
  }
};

// Nodal values reshaped to (ny+1) rows by (nx+1) cols; the lexicographic node
// layout is already row-major in y, so this is a straight copy.
inline FieldGrid field_from_nodal(const StructuredGrid& g, std::span<const double> nodal) {
  if (nodal.size() != static_cast<std::size_t>(g.node_count()))
    throw std::invalid_argument("field_from_nodal: size mismatch");
  FieldGrid f;
  f.rows = g.ny + 1;
  f.cols = g.nx + 1;
  f.values.assign(nodal.begin(), nodal.end());
  return f;
}

// Bilinear resampling at the cell centers of a target grid laid over the unit
// square. Exact (to rounding) on fields linear in x and y.
inline FieldGrid downsample(const FieldGrid& src, int target_rows, int target_cols) {
  if (src.rows < 2 || src.cols < 2)
    throw std::invalid_argument("downsample: source needs at least 2x2 samples");
  if (target_rows < 1 || target_cols < 1)
    throw std::invalid_argument("downsample: target must be at least 1x1");
  if (target_rows > src.rows || target_cols > src.cols)
    throw std::invalid_argument("downsample: target larger than source");
  FieldGrid out = FieldGrid::zeros(target_rows, target_cols);
  for (int r = 0; r < target_rows; ++r) {
    const double gy = (r + 0.5) / target_rows * (src.rows - 1);
    int j = static_cast<int>(gy);
    if (j > src.rows - 2) j = src.rows - 2;
    const double fy = gy - j;
    for (int c = 0; c < target_cols; ++c) {
      const double gx = (c + 0.5) / target_cols * (src.cols - 1);
      int i = static_cast<int>(gx);
      if (i > src.cols - 2) i = src.cols - 2;
      const double fx = gx - i;
      out.at(r, c) = (1.0 - fy) * ((1.0 - fx) * src.at(j, i) + fx * src.at(j, i + 1)) +
                     fy * ((1.0 - fx) * src.at(j + 1, i) + fx * src.at(j + 1, i + 1));
    }
  }
  return out;
}

struct Curve {
  std::vector<double> displacement;  // mm
  std::vector<double> force;         // N
};

// Two-column CSV with a header line; %.17g preserves doubles exactly.
inline void export_curve(std::span<const double> displacement, std::span<const double> force,
                         const std::string& path) {
  if (displacement.size() != force.size())
    throw std::invalid_argument("export_curve: column length mismatch");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError(IoError::Kind::Unwritable, "export_curve: cannot open " + path);
  std::fputs("displacement_mm,force_N\n", f);
  for (std::size_t i = 0; i < displacement.size(); ++i)
    std::fprintf(f, "%.17g,%.17g\n", displacement[i], force[i]);
  if (std::fclose(f) != 0)
    throw IoError(IoError::Kind::Unwritable, "export_curve: write failed for " + path);
}

inline void export_curve(std::span<const StepRecord> records, const std::string& path) {
  std::vector<double> d, f;
  d.reserve(records.size());
  f.reserve(records.size());
  for (const StepRecord& r : records) {
    d.push_back(r.applied_displacement);
    f.push_back(r.reaction_force);
  }
  export_curve(d, f, path);
}

inline Curve read_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::Malformed, "read_curve: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "displacement_mm,force_N")
    throw IoError(IoError::Kind::Malformed, "read_curve: bad header in " + path);
  Curve c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* s = line.c_str();
    char* end = nullptr;
    const double d = std::strtod(s, &end);
    if (end == s || *end != ',')
      throw IoError(IoError::Kind::Malformed, "read_curve: bad row in " + path);
    s = end + 1;
    const double fv = std::strtod(s, &end);
    if (end == s || *end != '\0')
      throw IoError(IoError::Kind::Malformed, "read_curve: bad row in " + path);
    c.displacement.push_back(d);
    c.force.push_back(fv);
  }
  return c;
}

// Root attribute not part of the fixed schema, preserved across a roundtrip.
struct ExtraAttr {
  enum class Kind { Float64, Int64, Uint64, Text };
  Kind kind = Kind::Float64;
  std::vector<std::size_t> dims;  // empty: scalar
  std::vector<double> f64;
  std::vector<std::int64_t> i64;
  std::vector<std::uint64_t> u64;
  std::string text;

  bool operator==(const ExtraAttr&) const = default;
};

struct SampleAttributes {
  std::uint64_t seed = 0;
  std::string bc;             // "tension" | "shear" | benchmark label
  std::string decomposition;  // "spect" | "voldev" | "starconvex"
  int n_cracks = 0;
  std::vector<CrackSegment> cracks;
  double E = 0, nu = 0, Gc = 0, l0 = 0, gamma_star = 0, k_res = 0;
  int nx = 0, ny = 0;
  double Lx = 0, Ly = 0;
  std::vector<double> schedule;  // absolute boundary displacement per step
  std::string prng;
  double stag_tol = 0, lin_rtol = 0;
  int max_stag_iters = 0;
  std::string preconditioner;  // "jacobi" | "ic0" | "none"
  int format_version = 1;
  std::map<std::string, ExtraAttr> extra;
};

inline const char* precon_label(PreconKind k) {
  switch (k) {
    case PreconKind::None: return "none";
    case PreconKind::Jacobi: return "jacobi";
    case PreconKind::IncompleteCholesky: return "ic0";
  }
  throw std::invalid_argument("precon_label: unknown kind");
}

inline PreconKind parse_precon(const std::string& s) {
  if (s == "none") return PreconKind::None;
  if (s == "jacobi") return PreconKind::Jacobi;
  if (s == "ic0") return PreconKind::IncompleteCholesky;
  throw std::invalid_argument("parse_precon: unknown preconditioner " + s);
}

inline SampleAttributes attributes_for(const ScenarioSpec& sc, const SolverConfig& config,
                                       std::uint64_t seed) {
  SampleAttributes a;
  a.seed = seed;
  a.bc = bc_label(sc.bc);
  a.decomposition = decomp_label(sc.decomposition);
  a.n_cracks = static_cast<int>(sc.cracks.size());
  a.cracks = sc.cracks;
  a.E = sc.material.E;
  a.nu = sc.material.nu;
  a.Gc = sc.material.Gc;
  a.l0 = sc.material.l0;
  a.gamma_star = sc.material.gamma_star;
  a.k_res = sc.material.k_res;
  a.nx = sc.grid.nx;
  a.ny = sc.grid.ny;
  a.Lx = sc.grid.Lx;
  a.Ly = sc.grid.Ly;
  a.schedule = sc.schedule.values;
  a.prng = Rng64::kId;
  a.stag_tol = config.stag_tol;
  a.lin_rtol = config.lin_rtol;
  a.max_stag_iters = config.max_stag_iters;
  a.preconditioner = precon_label(config.preconditioner);
  return a;
}

struct SampleFile {
  SampleAttributes attrs;
  std::vector<FieldGrid> phase, ux, uy;  // one grid per saved step
  std::vector<double> displacement, force;
};

namespace h5 {

// HDF5 emits its own error stack to stderr unless silenced once.
inline void quiet() {
  static const bool done = [] {
    H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr);
    return true;
  }();
  (void)done;
}

// Serial HDF5 builds keep library-wide state; every H5* call sequence runs
// under this lock so sample writers can live on worker threads.
inline std::mutex& api_mutex() {
  static std::mutex m;
  return m;
}

class Hid {
 public:
  using Closer = herr_t (*)(hid_t);
  Hid() = default;
  Hid(hid_t id, Closer closer) : id_(id), closer_(closer) {}
  Hid(const Hid&) = delete;
  Hid& operator=(const Hid&) = delete;
  Hid(Hid&& o) noexcept : id_(o.id_), closer_(o.closer_) { o.id_ = -1; }
  Hid& operator=(Hid&& o) noexcept {
    if (this != &o) {
      reset();
      id_ = o.id_;
      closer_ = o.closer_;
      o.id_ = -1;
    }
    return *this;
  }
  ~Hid() { reset(); }

  hid_t get() const { return id_; }
  bool valid() const { return id_ >= 0; }
  void reset() {
    if (id_ >= 0 && closer_) closer_(id_);
    id_ = -1;
  }

 private:
  hid_t id_ = -1;
  Closer closer_ = nullptr;
};

[[noreturn]] inline void fail(IoError::Kind kind, const std::string& what) {
  throw IoError(kind, what);
}

// Creation property list with object time tracking disabled; this is what
// keeps repeated writes bitwise identical.
inline Hid timeless_pcl(hid_t cls) {
  Hid p(H5Pcreate(cls), H5Pclose);
  if (!p.valid() || H5Pset_obj_track_times(p.get(), 0) < 0)
    fail(IoError::Kind::Unwritable, "hdf5: property list setup failed");
  return p;
}

inline Hid make_group(hid_t loc, const char* name) {
  Hid gcpl = timeless_pcl(H5P_GROUP_CREATE);
  Hid g(H5Gcreate2(loc, name, H5P_DEFAULT, gcpl.get(), H5P_DEFAULT), H5Gclose);
  if (!g.valid()) fail(IoError::Kind::Unwritable, std::string("hdf5: cannot create group ") + name);
  return g;
}

inline void write_dataset(hid_t loc, const char* name, std::span<const hsize_t> dims,
                          std::span<const double> data) {
  Hid space(H5Screate_simple(static_cast<int>(dims.size()), dims.data(), nullptr), H5Sclose);
  Hid dcpl = timeless_pcl(H5P_DATASET_CREATE);
  Hid ds(H5Dcreate2(loc, name, H5T_IEEE_F64LE, space.get(), H5P_DEFAULT, dcpl.get(),
                    H5P_DEFAULT),
         H5Dclose);
  if (!ds.valid() ||
      H5Dwrite(ds.get(), H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL, H5P_DEFAULT, data.data()) < 0)
    fail(IoError::Kind::Unwritable, std::string("hdf5: cannot write dataset ") + name);
}

inline Hid attr_space(std::span<const std::size_t> dims) {
  if (dims.empty()) return Hid(H5Screate(H5S_SCALAR), H5Sclose);
  std::vector<hsize_t> hd(dims.begin(), dims.end());
  return Hid(H5Screate_simple(static_cast<int>(hd.size()), hd.data(), nullptr), H5Sclose);
}

inline void write_attr_raw(hid_t loc, const char* name, hid_t file_type, hid_t mem_type,
                           std::span<const std::size_t> dims, const void* data) {
  Hid space = attr_space(dims);
  Hid a(H5Acreate2(loc, name, file_type, space.get(), H5P_DEFAULT, H5P_DEFAULT), H5Aclose);
  if (!a.valid() || H5Awrite(a.get(), mem_type, data) < 0)
    fail(IoError::Kind::Unwritable, std::string("hdf5: cannot write attribute ") + name);
}

inline void write_attr(hid_t loc, const char* name, double v) {
  write_attr_raw(loc, name, H5T_IEEE_F64LE, H5T_NATIVE_DOUBLE, {}, &v);
}
inline void write_attr(hid_t loc, const char* name, std::int64_t v) {
  write_attr_raw(loc, name, H5T_STD_I64LE, H5T_NATIVE_INT64, {}, &v);
}
inline void write_attr(hid_t loc, const char* name, std::uint64_t v) {
  write_attr_raw(loc, name, H5T_STD_U64LE, H5T_NATIVE_UINT64, {}, &v);
}
inline void write_attr(hid_t loc, const char* name, const std::string& v) {
  Hid type(H5Tcopy(H5T_C_S1), H5Tclose);
  H5Tset_size(type.get(), v.size() + 1);
  H5Tset_strpad(type.get(), H5T_STR_NULLTERM);
  write_attr_raw(loc, name, type.get(), type.get(), {}, v.c_str());
}
inline void write_attr(hid_t loc, const char* name, std::span<const std::size_t> dims,
                       std::span<const double> v) {
  write_attr_raw(loc, name, H5T_IEEE_F64LE, H5T_NATIVE_DOUBLE, dims, v.data());
}

inline bool has_attr(hid_t loc, const char* name) { return H5Aexists(loc, name) > 0; }

inline Hid open_attr(hid_t loc, const char* name) {
  if (!has_attr(loc, name))
    fail(IoError::Kind::Malformed, std::string("hdf5: missing attribute ") + name);
  Hid a(H5Aopen(loc, name, H5P_DEFAULT), H5Aclose);
  if (!a.valid()) fail(IoError::Kind::Malformed, std::string("hdf5: cannot open attribute ") + name);
  return a;
}

inline std::vector<std::size_t> attr_dims(hid_t attr, std::size_t& count) {
  Hid space(H5Aget_space(attr), H5Sclose);
  const int nd = H5Sget_simple_extent_ndims(space.get());
  std::vector<std::size_t> dims;
  count = 1;
  if (nd > 0) {
    std::vector<hsize_t> hd(nd);
    H5Sget_simple_extent_dims(space.get(), hd.data(), nullptr);
    for (hsize_t d : hd) {
      dims.push_back(static_cast<std::size_t>(d));
      count *= static_cast<std::size_t>(d);
    }
  }
  return dims;
}

inline double read_attr_f64(hid_t loc, const char* name) {
  Hid a = open_attr(loc, name);
  double v = 0.0;
  if (H5Aread(a.get(), H5T_NATIVE_DOUBLE, &v) < 0)
    fail(IoError::Kind::Malformed, std::string("hdf5: cannot read attribute ") + name);
  return v;
}

inline std::int64_t read_attr_i64(hid_t loc, const char* name) {
  Hid a = open_attr(loc, name);
  std::int64_t v = 0;
  if (H5Aread(a.get(), H5T_NATIVE_INT64, &v) < 0)
    fail(IoError::Kind::Malformed, std::string("hdf5: cannot read attribute ") + name);
  return v;
}

inline std::uint64_t read_attr_u64(hid_t loc, const char* name) {
  Hid a = open_attr(loc, name);
  std::uint64_t v = 0;
  if (H5Aread(a.get(), H5T_NATIVE_UINT64, &v) < 0)
    fail(IoError::Kind::Malformed, std::string("hdf5: cannot read attribute ") + name);
  return v;
}

inline std::string read_attr_string_from(hid_t attr, const char* name) {
  Hid type(H5Aget_type(attr), H5Tclose);
  if (H5Tis_variable_str(type.get()) > 0) {
    char* p = nullptr;
    Hid mem(H5Tcopy(H5T_C_S1), H5Tclose);
    H5Tset_size(mem.get(), H5T_VARIABLE);
    if (H5Aread(attr, mem.get(), &p) < 0 || !p)
      fail(IoError::Kind::Malformed, std::string("hdf5: cannot read attribute ") + name);
    std::string s(p);
    H5free_memory(p);
    return s;
  }
  const std::size_t n = H5Tget_size(type.get());
  std::vector<char> buf(n + 1, '\0');
  if (H5Aread(attr, type.get(), buf.data()) < 0)
    fail(IoError::Kind::Malformed, std::string("hdf5: cannot read attribute ") + name);
  return std::string(buf.data());
}

inline std::string read_attr_string(hid_t loc, const char* name) {
  Hid a = open_attr(loc, name);
  return read_attr_string_from(a.get(), name);
}

inline std::vector<double> read_attr_f64_array(hid_t loc, const char* name,
                                               std::vector<std::size_t>* dims_out = nullptr) {
  Hid a = open_attr(loc, name);
  std::size_t count = 0;
  std::vector<std::size_t> dims = attr_dims(a.get(), count);
  std::vector<double> v(count);
  if (count > 0 && H5Aread(a.get(), H5T_NATIVE_DOUBLE, v.data()) < 0)
    fail(IoError::Kind::Malformed, std::string("hdf5: cannot read attribute ") + name);
  if (dims_out) *dims_out = std::move(dims);
  return v;
}

inline std::vector<double> read_dataset(hid_t loc, const char* name,
                                        std::vector<std::size_t>& dims) {
  Hid ds(H5Dopen2(loc, name, H5P_DEFAULT), H5Dclose);
  if (!ds.valid()) fail(IoError::Kind::Malformed, std::string("hdf5: missing dataset ") + name);
  Hid space(H5Dget_space(ds.get()), H5Sclose);
  const int nd = H5Sget_simple_extent_ndims(space.get());
  std::vector<hsize_t> hd(std::max(nd, 0));
  if (nd > 0) H5Sget_simple_extent_dims(space.get(), hd.data(), nullptr);
  dims.clear();
  std::size_t count = 1;
  for (hsize_t d : hd) {
    dims.push_back(static_cast<std::size_t>(d));
    count *= static_cast<std::size_t>(d);
  }
  std::vector<double> v(count);
  if (count > 0 &&
      H5Dread(ds.get(), H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL, H5P_DEFAULT, v.data()) < 0)
    fail(IoError::Kind::Malformed, std::string("hdf5: cannot read dataset ") + name);
  return v;
}

}  // namespace h5

namespace detail {

inline std::string step_name(int s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "step_%04d", s);
  return buf;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline const char* const kKnownAttrs[] = {
    "format_version", "seed", "bc", "decomposition", "n_cracks", "crack_table",
    "E", "nu", "Gc", "l0", "gamma_star", "k_res", "nx", "ny", "Lx", "Ly",
    "schedule", "prng", "stag_tol", "max_stag_iters", "lin_rtol", "preconditioner"};

inline bool is_known_attr(const char* name) {
  for (const char* k : kKnownAttrs)
    if (std::strcmp(k, name) == 0) return true;
  return false;
}

struct AttrCollector {
  std::map<std::string, ExtraAttr>* out;
};

inline herr_t collect_extra_attr(hid_t loc, const char* name, const H5A_info_t*, void* op) {
  auto* col = static_cast<AttrCollector*>(op);
  if (is_known_attr(name)) return 0;
  h5::Hid a(H5Aopen(loc, name, H5P_DEFAULT), H5Aclose);
  if (!a.valid()) return -1;
  h5::Hid type(H5Aget_type(a.get()), H5Tclose);
  ExtraAttr e;
  std::size_t count = 0;
  e.dims = h5::attr_dims(a.get(), count);
  switch (H5Tget_class(type.get())) {
    case H5T_FLOAT:
      e.kind = ExtraAttr::Kind::Float64;
      e.f64.resize(count);
      if (count > 0 && H5Aread(a.get(), H5T_NATIVE_DOUBLE, e.f64.data()) < 0) return -1;
      break;
    case H5T_INTEGER:
      if (H5Tget_sign(type.get()) == H5T_SGN_NONE) {
        e.kind = ExtraAttr::Kind::Uint64;
        e.u64.resize(count);
        if (count > 0 && H5Aread(a.get(), H5T_NATIVE_UINT64, e.u64.data()) < 0) return -1;
      } else {
        e.kind = ExtraAttr::Kind::Int64;
        e.i64.resize(count);
        if (count > 0 && H5Aread(a.get(), H5T_NATIVE_INT64, e.i64.data()) < 0) return -1;
      }
      break;
    case H5T_STRING:
      e.kind = ExtraAttr::Kind::Text;
      e.dims.clear();
      e.text = h5::read_attr_string_from(a.get(), name);
      break;
    default:
      return 0;  // unsupported class: skipped, not preserved
  }
  (*col->out)[name] = std::move(e);
  return 0;
}

inline void write_extra_attr(hid_t loc, const std::string& name, const ExtraAttr& e) {
  switch (e.kind) {
    case ExtraAttr::Kind::Float64:
      h5::write_attr_raw(loc, name.c_str(), H5T_IEEE_F64LE, H5T_NATIVE_DOUBLE, e.dims,
                         e.f64.data());
      break;
    case ExtraAttr::Kind::Int64:
      h5::write_attr_raw(loc, name.c_str(), H5T_STD_I64LE, H5T_NATIVE_INT64, e.dims,
                         e.i64.data());
      break;
    case ExtraAttr::Kind::Uint64:
      h5::write_attr_raw(loc, name.c_str(), H5T_STD_U64LE, H5T_NATIVE_UINT64, e.dims,
                         e.u64.data());
      break;
    case ExtraAttr::Kind::Text:
      h5::write_attr(loc, name.c_str(), e.text);
      break;
  }
}

inline void write_root_attrs(hid_t file, const SampleAttributes& a) {
  h5::write_attr(file, "format_version", static_cast<std::int64_t>(a.format_version));
  h5::write_attr(file, "seed", a.seed);
  h5::write_attr(file, "bc", a.bc);
  h5::write_attr(file, "decomposition", a.decomposition);
  h5::write_attr(file, "n_cracks", static_cast<std::int64_t>(a.n_cracks));
  if (!a.cracks.empty()) {
    std::vector<double> table;
    table.reserve(a.cracks.size() * 4);
    for (const CrackSegment& c : a.cracks) {
      table.push_back(c.cx);
      table.push_back(c.cy);
      table.push_back(c.theta);
      table.push_back(c.length);
    }
    const std::size_t dims[2] = {a.cracks.size(), 4};
    h5::write_attr(file, "crack_table", dims, table);
  }
  h5::write_attr(file, "E", a.E);
  h5::write_attr(file, "nu", a.nu);
  h5::write_attr(file, "Gc", a.Gc);
  h5::write_attr(file, "l0", a.l0);
  h5::write_attr(file, "gamma_star", a.gamma_star);
  h5::write_attr(file, "k_res", a.k_res);
  h5::write_attr(file, "nx", static_cast<std::int64_t>(a.nx));
  h5::write_attr(file, "ny", static_cast<std::int64_t>(a.ny));
  h5::write_attr(file, "Lx", a.Lx);
  h5::write_attr(file, "Ly", a.Ly);
  if (!a.schedule.empty()) {
    const std::size_t dims[1] = {a.schedule.size()};
    h5::write_attr(file, "schedule", dims, a.schedule);
  }
  h5::write_attr(file, "prng", a.prng);
  h5::write_attr(file, "stag_tol", a.stag_tol);
  h5::write_attr(file, "max_stag_iters", static_cast<std::int64_t>(a.max_stag_iters));
  h5::write_attr(file, "lin_rtol", a.lin_rtol);
  h5::write_attr(file, "preconditioner", a.preconditioner);
  for (const auto& [name, e] : a.extra) write_extra_attr(file, name, e);
}

inline SampleAttributes read_root_attrs(hid_t file) {
  const std::int64_t version = h5::read_attr_i64(file, "format_version");
  if (version != 1)
    throw IoError(IoError::Kind::VersionMismatch,
                  "sample file has format_version " + std::to_string(version) + ", expected 1");
  SampleAttributes a;
  a.format_version = static_cast<int>(version);
  a.seed = h5::read_attr_u64(file, "seed");
  a.bc = h5::read_attr_string(file, "bc");
  a.decomposition = h5::read_attr_string(file, "decomposition");
  a.n_cracks = static_cast<int>(h5::read_attr_i64(file, "n_cracks"));
  if (h5::has_attr(file, "crack_table")) {
    std::vector<std::size_t> dims;
    const std::vector<double> table = h5::read_attr_f64_array(file, "crack_table", &dims);
    if (dims.size() != 2 || dims[1] != 4)
      throw IoError(IoError::Kind::Malformed, "crack_table attribute has wrong shape");
    for (std::size_t k = 0; k < dims[0]; ++k)
      a.cracks.push_back({table[4 * k], table[4 * k + 1], table[4 * k + 2], table[4 * k + 3]});
  }
  a.E = h5::read_attr_f64(file, "E");
  a.nu = h5::read_attr_f64(file, "nu");
  a.Gc = h5::read_attr_f64(file, "Gc");
  a.l0 = h5::read_attr_f64(file, "l0");
  a.gamma_star = h5::read_attr_f64(file, "gamma_star");
  a.k_res = h5::read_attr_f64(file, "k_res");
  a.nx = static_cast<int>(h5::read_attr_i64(file, "nx"));
  a.ny = static_cast<int>(h5::read_attr_i64(file, "ny"));
  a.Lx = h5::read_attr_f64(file, "Lx");
  a.Ly = h5::read_attr_f64(file, "Ly");
  if (h5::has_attr(file, "schedule")) a.schedule = h5::read_attr_f64_array(file, "schedule");
  a.prng = h5::read_attr_string(file, "prng");
  a.stag_tol = h5::read_attr_f64(file, "stag_tol");
  a.max_stag_iters = static_cast<int>(h5::read_attr_i64(file, "max_stag_iters"));
  a.lin_rtol = h5::read_attr_f64(file, "lin_rtol");
  a.preconditioner = h5::read_attr_string(file, "preconditioner");
  AttrCollector col{&a.extra};
  hsize_t idx = 0;
  if (H5Aiterate2(file, H5_INDEX_NAME, H5_ITER_INC, &idx, collect_extra_attr, &col) < 0)
    throw IoError(IoError::Kind::Malformed, "cannot enumerate root attributes");
  return a;
}

}  // namespace detail

// Incremental sample writer; add steps in order, then finish(). finish() is
// what writes the curves, so a file without it reads back as truncated.
class SampleWriter {
 public:
  SampleWriter(const std::string& path, const SampleAttributes& attrs) : path_(path) {
    h5::quiet();
    if (detail::ends_with(path, ".h5") || detail::ends_with(path, ".hdf5")) {
      hdf5_ = true;
      const std::lock_guard<std::mutex> guard(h5::api_mutex());
      open_h5(attrs);
    } else if (detail::ends_with(path, ".pfb")) {
      hdf5_ = false;
      open_pfb(attrs);
    } else {
      throw std::invalid_argument("SampleWriter: unknown extension on " + path);
    }
  }

  SampleWriter(const SampleWriter&) = delete;
  SampleWriter& operator=(const SampleWriter&) = delete;

  ~SampleWriter() {
    if (!finished_) {
      try {
        finish();
      } catch (...) {
      }
    }
  }

  void add_step(const FieldGrid& phase, const FieldGrid& ux, const FieldGrid& uy,
                double displacement, double force) {
    check_shape(phase);
    check_shape(ux);
    check_shape(uy);
    if (hdf5_) {
      const std::lock_guard<std::mutex> guard(h5::api_mutex());
      const hsize_t dims[2] = {static_cast<hsize_t>(rows_), static_cast<hsize_t>(cols_)};
      const std::string name = detail::step_name(steps_);
      h5::write_dataset(gphase_.get(), name.c_str(), dims, phase.values);
      h5::write_dataset(gux_.get(), name.c_str(), dims, ux.values);
      h5::write_dataset(guy_.get(), name.c_str(), dims, uy.values);
    } else {
      write_raw(phase.values);
      write_raw(ux.values);
      write_raw(uy.values);
    }
    displacement_.push_back(displacement);
    force_.push_back(force);
    ++steps_;
  }

  void add_step(const StructuredGrid& g, const StepRecord& r) {
    add_step(field_from_nodal(g, r.phi), field_from_nodal(g, r.ux), field_from_nodal(g, r.uy),
             r.applied_displacement, r.reaction_force);
  }

  void finish() {
    if (finished_) return;
    finished_ = true;
    if (hdf5_) {
      const std::lock_guard<std::mutex> guard(h5::api_mutex());
      Hgroup curves = h5::make_group(file_.get(), "curves");
      const hsize_t n[1] = {static_cast<hsize_t>(steps_)};
      h5::write_dataset(curves.get(), "displacement", n, displacement_);
      h5::write_dataset(curves.get(), "force", n, force_);
      gphase_.reset();
      gux_.reset();
      guy_.reset();
      gfields_.reset();
      curves.reset();
      file_.reset();
    } else {
      write_raw(displacement_);
      write_raw(force_);
      if (std::fclose(bin_) != 0) {
        bin_ = nullptr;
        throw IoError(IoError::Kind::Unwritable, "SampleWriter: close failed for " + path_);
      }
      bin_ = nullptr;
      sidecar_["steps"] = steps_;
      std::ofstream js(path_ + ".json");
      if (!js) throw IoError(IoError::Kind::Unwritable, "SampleWriter: cannot write sidecar");
      js << sidecar_.dump(2) << '\n';
      if (!js) throw IoError(IoError::Kind::Unwritable, "SampleWriter: sidecar write failed");
    }
  }

  int steps() const { return steps_; }

 private:
  using Hgroup = h5::Hid;

  void check_shape(const FieldGrid& f) const {
    if (f.rows != rows_ || f.cols != cols_ ||
        f.values.size() != static_cast<std::size_t>(rows_) * cols_)
      throw std::invalid_argument("SampleWriter: field shape mismatch");
  }

  void open_h5(const SampleAttributes& attrs) {
    rows_ = attrs.ny + 1;
    cols_ = attrs.nx + 1;
    h5::Hid fcpl = h5::timeless_pcl(H5P_FILE_CREATE);
    file_ = h5::Hid(H5Fcreate(path_.c_str(), H5F_ACC_TRUNC, fcpl.get(), H5P_DEFAULT), H5Fclose);
    if (!file_.valid())
      throw IoError(IoError::Kind::Unwritable, "SampleWriter: cannot create " + path_);
    detail::write_root_attrs(file_.get(), attrs);
    gfields_ = h5::make_group(file_.get(), "fields");
    gphase_ = h5::make_group(gfields_.get(), "phase");
    gux_ = h5::make_group(gfields_.get(), "ux");
    guy_ = h5::make_group(gfields_.get(), "uy");
  }

  void open_pfb(const SampleAttributes& attrs) {
    rows_ = attrs.ny + 1;
    cols_ = attrs.nx + 1;
    bin_ = std::fopen(path_.c_str(), "wb");
    if (!bin_) throw IoError(IoError::Kind::Unwritable, "SampleWriter: cannot create " + path_);
    nlohmann::json j;
    j["format_version"] = attrs.format_version;
    j["seed"] = attrs.seed;
    j["bc"] = attrs.bc;
    j["decomposition"] = attrs.decomposition;
    j["n_cracks"] = attrs.n_cracks;
    nlohmann::json table = nlohmann::json::array();
    for (const CrackSegment& c : attrs.cracks)
      table.push_back({c.cx, c.cy, c.theta, c.length});
    j["crack_table"] = table;
    j["material"] = {{"E", attrs.E},
                     {"nu", attrs.nu},
                     {"Gc", attrs.Gc},
                     {"l0", attrs.l0},
                     {"gamma_star", attrs.gamma_star},
                     {"k_res", attrs.k_res}};
    j["grid"] = {{"nx", attrs.nx}, {"ny", attrs.ny}, {"Lx", attrs.Lx}, {"Ly", attrs.Ly}};
    j["schedule"] = attrs.schedule;
    j["prng"] = attrs.prng;
    j["solver"] = {{"stag_tol", attrs.stag_tol},
                   {"max_stag_iters", attrs.max_stag_iters},
                   {"lin_rtol", attrs.lin_rtol},
                   {"preconditioner", attrs.preconditioner}};
    j["rows"] = rows_;
    j["cols"] = cols_;
    nlohmann::json extra = nlohmann::json::object();
    for (const auto& [name, e] : attrs.extra) {
      nlohmann::json je;
      switch (e.kind) {
        case ExtraAttr::Kind::Float64:
          je["kind"] = "f64";
          je["data"] = e.f64;
          break;
        case ExtraAttr::Kind::Int64:
          je["kind"] = "i64";
          je["data"] = e.i64;
          break;
        case ExtraAttr::Kind::Uint64:
          je["kind"] = "u64";
          je["data"] = e.u64;
          break;
        case ExtraAttr::Kind::Text:
          je["kind"] = "text";
          je["data"] = e.text;
          break;
      }
      je["dims"] = e.dims;
      extra[name] = std::move(je);
    }
    j["extra"] = std::move(extra);
    sidecar_ = std::move(j);
  }

  void write_raw(std::span<const double> v) {
    if (!v.empty() && std::fwrite(v.data(), sizeof(double), v.size(), bin_) != v.size())
      throw IoError(IoError::Kind::Unwritable, "SampleWriter: write failed for " + path_);
  }

  std::string path_;
  bool hdf5_ = false;
  bool finished_ = false;
  int rows_ = 0, cols_ = 0;
  int steps_ = 0;
  std::vector<double> displacement_, force_;
  h5::Hid file_, gfields_, gphase_, gux_, guy_;
  std::FILE* bin_ = nullptr;
  nlohmann::json sidecar_;
};

inline void write_sample(const std::string& path, const SampleFile& sample) {
  if (sample.phase.size() != sample.ux.size() || sample.phase.size() != sample.uy.size() ||
      sample.phase.size() != sample.displacement.size() ||
      sample.displacement.size() != sample.force.size())
    throw std::invalid_argument("write_sample: inconsistent step counts");
  SampleWriter w(path, sample.attrs);
  for (std::size_t s = 0; s < sample.phase.size(); ++s)
    w.add_step(sample.phase[s], sample.ux[s], sample.uy[s], sample.displacement[s],
               sample.force[s]);
  w.finish();
}

inline void write_sample(const std::string& path, std::span<const StepRecord> records,
                         const SampleAttributes& attrs) {
  if (records.empty()) throw std::invalid_argument("write_sample: no records");
  const StructuredGrid g(attrs.nx, attrs.ny, attrs.Lx, attrs.Ly);
  SampleWriter w(path, attrs);
  for (const StepRecord& r : records) w.add_step(g, r);
  w.finish();
}

namespace detail {

inline SampleFile read_sample_h5(const std::string& path) {
  h5::quiet();
  const std::lock_guard<std::mutex> guard(h5::api_mutex());
  if (H5Fis_hdf5(path.c_str()) <= 0)
    throw IoError(IoError::Kind::Malformed, "read_sample: not an HDF5 file: " + path);
  h5::Hid file(H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
  if (!file.valid()) throw IoError(IoError::Kind::Malformed, "read_sample: cannot open " + path);

  SampleFile out;
  out.attrs = read_root_attrs(file.get());

  if (H5Lexists(file.get(), "/fields", H5P_DEFAULT) <= 0)
    throw IoError(IoError::Kind::Malformed, "read_sample: missing /fields");
  const char* field_names[3] = {"/fields/phase", "/fields/ux", "/fields/uy"};
  std::vector<FieldGrid>* dests[3] = {&out.phase, &out.ux, &out.uy};
  hsize_t counts[3] = {0, 0, 0};
  for (int k = 0; k < 3; ++k) {
    if (H5Lexists(file.get(), field_names[k], H5P_DEFAULT) <= 0)
      throw IoError(IoError::Kind::Malformed,
                    std::string("read_sample: missing ") + field_names[k]);
    h5::Hid grp(H5Gopen2(file.get(), field_names[k], H5P_DEFAULT), H5Gclose);
    H5G_info_t info;
    if (H5Gget_info(grp.get(), &info) < 0)
      throw IoError(IoError::Kind::Malformed, "read_sample: cannot stat field group");
    counts[k] = info.nlinks;
  }
  if (counts[0] != counts[1] || counts[0] != counts[2])
    throw IoError(IoError::Kind::Truncated, "read_sample: field groups have unequal step counts");

  const int steps = static_cast<int>(counts[0]);
  for (int k = 0; k < 3; ++k) {
    h5::Hid grp(H5Gopen2(file.get(), field_names[k], H5P_DEFAULT), H5Gclose);
    for (int s = 0; s < steps; ++s) {
      const std::string name = step_name(s);
      if (H5Lexists(grp.get(), name.c_str(), H5P_DEFAULT) <= 0)
        throw IoError(IoError::Kind::Truncated,
                      "read_sample: missing step dataset " + name);
      std::vector<std::size_t> dims;
      FieldGrid f;
      f.values = h5::read_dataset(grp.get(), name.c_str(), dims);
      if (dims.size() != 2)
        throw IoError(IoError::Kind::Malformed, "read_sample: field dataset is not 2D");
      f.rows = static_cast<int>(dims[0]);
      f.cols = static_cast<int>(dims[1]);
      if (f.rows != out.attrs.ny + 1 || f.cols != out.attrs.nx + 1)
        throw IoError(IoError::Kind::Malformed, "read_sample: field shape disagrees with grid");
      dests[k]->push_back(std::move(f));
    }
  }

  if (H5Lexists(file.get(), "/curves", H5P_DEFAULT) <= 0)
    throw IoError(IoError::Kind::Malformed, "read_sample: missing /curves");
  for (const char* name : {"displacement", "force"}) {
    h5::Hid curves(H5Gopen2(file.get(), "/curves", H5P_DEFAULT), H5Gclose);
    if (H5Lexists(curves.get(), name, H5P_DEFAULT) <= 0)
      throw IoError(IoError::Kind::Malformed,
                    std::string("read_sample: missing /curves/") + name);
    std::vector<std::size_t> dims;
    std::vector<double> v = h5::read_dataset(curves.get(), name, dims);
    if (std::strcmp(name, "displacement") == 0)
      out.displacement = std::move(v);
    else
      out.force = std::move(v);
  }
  if (out.displacement.size() != static_cast<std::size_t>(steps) ||
      out.force.size() != static_cast<std::size_t>(steps))
    throw IoError(IoError::Kind::Truncated, "read_sample: curve length disagrees with steps");
  return out;
}

inline SampleFile read_sample_pfb(const std::string& path) {
  std::ifstream js(path + ".json");
  if (!js) throw IoError(IoError::Kind::Malformed, "read_sample: missing sidecar for " + path);
  nlohmann::json j;
  try {
    js >> j;
  } catch (const nlohmann::json::exception&) {
    throw IoError(IoError::Kind::Malformed, "read_sample: bad sidecar JSON for " + path);
  }

  SampleFile out;
  try {
    const int version = j.at("format_version").get<int>();
    if (version != 1)
      throw IoError(IoError::Kind::VersionMismatch,
                    "sample file has format_version " + std::to_string(version) + ", expected 1");
    SampleAttributes& a = out.attrs;
    a.format_version = version;
    a.seed = j.at("seed").get<std::uint64_t>();
    a.bc = j.at("bc").get<std::string>();
    a.decomposition = j.at("decomposition").get<std::string>();
    a.n_cracks = j.at("n_cracks").get<int>();
    for (const auto& row : j.at("crack_table"))
      a.cracks.push_back({row.at(0).get<double>(), row.at(1).get<double>(),
                          row.at(2).get<double>(), row.at(3).get<double>()});
    const auto& m = j.at("material");
    a.E = m.at("E").get<double>();
    a.nu = m.at("nu").get<double>();
    a.Gc = m.at("Gc").get<double>();
    a.l0 = m.at("l0").get<double>();
    a.gamma_star = m.at("gamma_star").get<double>();
    a.k_res = m.at("k_res").get<double>();
    const auto& gr = j.at("grid");
    a.nx = gr.at("nx").get<int>();
    a.ny = gr.at("ny").get<int>();
    a.Lx = gr.at("Lx").get<double>();
    a.Ly = gr.at("Ly").get<double>();
    a.schedule = j.at("schedule").get<std::vector<double>>();
    a.prng = j.at("prng").get<std::string>();
    const auto& sv = j.at("solver");
    a.stag_tol = sv.at("stag_tol").get<double>();
    a.max_stag_iters = sv.at("max_stag_iters").get<int>();
    a.lin_rtol = sv.at("lin_rtol").get<double>();
    a.preconditioner = sv.at("preconditioner").get<std::string>();
    for (const auto& [name, je] : j.at("extra").items()) {
      ExtraAttr e;
      const std::string kind = je.at("kind").get<std::string>();
      e.dims = je.at("dims").get<std::vector<std::size_t>>();
      if (kind == "f64") {
        e.kind = ExtraAttr::Kind::Float64;
        e.f64 = je.at("data").get<std::vector<double>>();
      } else if (kind == "i64") {
        e.kind = ExtraAttr::Kind::Int64;
        e.i64 = je.at("data").get<std::vector<std::int64_t>>();
      } else if (kind == "u64") {
        e.kind = ExtraAttr::Kind::Uint64;
        e.u64 = je.at("data").get<std::vector<std::uint64_t>>();
      } else if (kind == "text") {
        e.kind = ExtraAttr::Kind::Text;
        e.text = je.at("data").get<std::string>();
      } else {
        throw IoError(IoError::Kind::Malformed, "read_sample: unknown extra attr kind " + kind);
      }
      a.extra[name] = std::move(e);
    }
  } catch (const nlohmann::json::exception&) {
    throw IoError(IoError::Kind::Malformed, "read_sample: sidecar missing required keys");
  }

  const int steps = [&] {
    try {
      return j.at("steps").get<int>();
    } catch (const nlohmann::json::exception&) {
      throw IoError(IoError::Kind::Malformed, "read_sample: sidecar missing step count");
    }
  }();
  const int rows = out.attrs.ny + 1, cols = out.attrs.nx + 1;
  const std::size_t per_field = static_cast<std::size_t>(rows) * cols;

  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw IoError(IoError::Kind::Malformed, "read_sample: cannot open " + path);
  bin.seekg(0, std::ios::end);
  const std::uint64_t size = static_cast<std::uint64_t>(bin.tellg());
  const std::uint64_t expected =
      sizeof(double) * (3 * per_field * static_cast<std::uint64_t>(steps) + 2ull * steps);
  if (size != expected)
    throw IoError(IoError::Kind::Truncated, "read_sample: binary payload size mismatch");
  bin.seekg(0);

  auto read_block = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    bin.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!bin) throw IoError(IoError::Kind::Truncated, "read_sample: short read");
  };
  for (int s = 0; s < steps; ++s) {
    FieldGrid phase, ux, uy;
    phase.rows = ux.rows = uy.rows = rows;
    phase.cols = ux.cols = uy.cols = cols;
    read_block(phase.values, per_field);
    read_block(ux.values, per_field);
    read_block(uy.values, per_field);
    out.phase.push_back(std::move(phase));
    out.ux.push_back(std::move(ux));
    out.uy.push_back(std::move(uy));
  }
  read_block(out.displacement, steps);
  read_block(out.force, steps);
  return out;
}

}  // namespace detail

inline SampleFile read_sample(const std::string& path) {
  if (detail::ends_with(path, ".h5") || detail::ends_with(path, ".hdf5"))
    return detail::read_sample_h5(path);
  if (detail::ends_with(path, ".pfb")) return detail::read_sample_pfb(path);
  throw std::invalid_argument("read_sample: unknown extension on " + path);
}

// Standalone single-field files: one 2D dataset, used for predictions and
// evaluation inputs that are not full samples.
inline void write_field(const std::string& path, const FieldGrid& f) {
  h5::quiet();
  if (detail::ends_with(path, ".h5") || detail::ends_with(path, ".hdf5")) {
    const std::lock_guard<std::mutex> guard(h5::api_mutex());
    h5::Hid fcpl = h5::timeless_pcl(H5P_FILE_CREATE);
    h5::Hid file(H5Fcreate(path.c_str(), H5F_ACC_TRUNC, fcpl.get(), H5P_DEFAULT), H5Fclose);
    if (!file.valid())
      throw IoError(IoError::Kind::Unwritable, "write_field: cannot create " + path);
    h5::write_attr(file.get(), "format_version", static_cast<std::int64_t>(1));
    const hsize_t dims[2] = {static_cast<hsize_t>(f.rows), static_cast<hsize_t>(f.cols)};
    h5::write_dataset(file.get(), "field", dims, f.values);
  } else if (detail::ends_with(path, ".pfb")) {
    std::FILE* bin = std::fopen(path.c_str(), "wb");
    if (!bin) throw IoError(IoError::Kind::Unwritable, "write_field: cannot create " + path);
    if (!f.values.empty() &&
        std::fwrite(f.values.data(), sizeof(double), f.values.size(), bin) != f.values.size()) {
      std::fclose(bin);
      throw IoError(IoError::Kind::Unwritable, "write_field: write failed for " + path);
    }
    if (std::fclose(bin) != 0)
      throw IoError(IoError::Kind::Unwritable, "write_field: close failed for " + path);
    nlohmann::json j{{"format_version", 1}, {"rows", f.rows}, {"cols", f.cols}};
    std::ofstream js(path + ".json");
    js << j.dump(2) << '\n';
    if (!js) throw IoError(IoError::Kind::Unwritable, "write_field: sidecar write failed");
  } else {
    throw std::invalid_argument("write_field: unknown extension on " + path);
  }
}

inline FieldGrid read_field(const std::string& path) {
  h5::quiet();
  if (detail::ends_with(path, ".h5") || detail::ends_with(path, ".hdf5")) {
    const std::lock_guard<std::mutex> guard(h5::api_mutex());
    if (H5Fis_hdf5(path.c_str()) <= 0)
      throw IoError(IoError::Kind::Malformed, "read_field: not an HDF5 file: " + path);
    h5::Hid file(H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
    if (!file.valid()) throw IoError(IoError::Kind::Malformed, "read_field: cannot open " + path);
    const std::int64_t version = h5::read_attr_i64(file.get(), "format_version");
    if (version != 1)
      throw IoError(IoError::Kind::VersionMismatch,
                    "field file has format_version " + std::to_string(version) + ", expected 1");
    std::vector<std::size_t> dims;
    FieldGrid f;
    f.values = h5::read_dataset(file.get(), "field", dims);
    if (dims.size() != 2)
      throw IoError(IoError::Kind::Malformed, "read_field: dataset is not 2D");
    f.rows = static_cast<int>(dims[0]);
    f.cols = static_cast<int>(dims[1]);
    return f;
  }
  if (detail::ends_with(path, ".pfb")) {
    std::ifstream js(path + ".json");
    if (!js) throw IoError(IoError::Kind::Malformed, "read_field: missing sidecar for " + path);
    nlohmann::json j;
    try {
      js >> j;
    } catch (const nlohmann::json::exception&) {
      throw IoError(IoError::Kind::Malformed, "read_field: bad sidecar JSON for " + path);
    }
    FieldGrid f;
    try {
      const int version = j.at("format_version").get<int>();
      if (version != 1)
        throw IoError(IoError::Kind::VersionMismatch,
                      "field file has format_version " + std::to_string(version) +
                          ", expected 1");
      f.rows = j.at("rows").get<int>();
      f.cols = j.at("cols").get<int>();
    } catch (const nlohmann::json::exception&) {
      throw IoError(IoError::Kind::Malformed, "read_field: sidecar missing required keys");
    }
    std::ifstream bin(path, std::ios::binary);
    if (!bin) throw IoError(IoError::Kind::Malformed, "read_field: cannot open " + path);
    bin.seekg(0, std::ios::end);
    const std::uint64_t size = static_cast<std::uint64_t>(bin.tellg());
    const std::size_t count = static_cast<std::size_t>(f.rows) * f.cols;
    if (size != count * sizeof(double))
      throw IoError(IoError::Kind::Truncated, "read_field: binary payload size mismatch");
    bin.seekg(0);
    f.values.resize(count);
    bin.read(reinterpret_cast<char*>(f.values.data()),
             static_cast<std::streamsize>(count * sizeof(double)));
    if (!bin) throw IoError(IoError::Kind::Truncated, "read_field: short read");
    return f;
  }
  throw std::invalid_argument("read_field: unknown extension on " + path);
}

// Final phase field of a sample, or the bare field of a standalone file.
inline FieldGrid read_phase_field(const std::string& path) {
  h5::quiet();
  if (detail::ends_with(path, ".h5") || detail::ends_with(path, ".hdf5")) {
    bool standalone = false;
    {
      const std::lock_guard<std::mutex> guard(h5::api_mutex());
      if (H5Fis_hdf5(path.c_str()) <= 0)
        throw IoError(IoError::Kind::Malformed, "read_phase_field: not an HDF5 file: " + path);
      h5::Hid file(H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
      if (!file.valid())
        throw IoError(IoError::Kind::Malformed, "read_phase_field: cannot open " + path);
      standalone = H5Lexists(file.get(), "/fields", H5P_DEFAULT) <= 0;
    }
    if (standalone) return read_field(path);
    SampleFile s = detail::read_sample_h5(path);
    if (s.phase.empty())
      throw IoError(IoError::Kind::Truncated, "read_phase_field: sample has no steps");
    return std::move(s.phase.back());
  }
  if (detail::ends_with(path, ".pfb")) {
    std::ifstream js(path + ".json");
    if (!js)
      throw IoError(IoError::Kind::Malformed, "read_phase_field: missing sidecar for " + path);
    nlohmann::json j;
    try {
      js >> j;
    } catch (const nlohmann::json::exception&) {
      throw IoError(IoError::Kind::Malformed, "read_phase_field: bad sidecar for " + path);
    }
    if (!j.contains("steps")) return read_field(path);
    SampleFile s = detail::read_sample_pfb(path);
    if (s.phase.empty())
      throw IoError(IoError::Kind::Truncated, "read_phase_field: sample has no steps");
    return std::move(s.phase.back());
  }
  throw std::invalid_argument("read_phase_field: unknown extension on " + path);
}

}  // namespace pfm
