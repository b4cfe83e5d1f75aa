#include "apir/io.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace apir {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void write_bytes(const std::string& path, const void* data, std::size_t n) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(static_cast<const char*>(data), std::streamsize(n));
  if (!f) throw IoError("write failed: " + path);
}

std::vector<char> read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open: " + path);
  auto n = f.tellg();
  f.seekg(0);
  std::vector<char> buf(static_cast<std::size_t>(n));
  f.read(buf.data(), n);
  if (!f) throw IoError("read failed: " + path);
  return buf;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
  if (!f) throw IoError("write failed: " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw IoError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

json shape_of(int nf, int n1, int n2) {
  return nf == 1 ? json{n1, n2} : json{nf, n1, n2};
}

void parse_shape(const json& s, int& nf, int& n1, int& n2, const std::string& path) {
  if (!s.is_array() || s.size() < 2 || s.size() > 3)
    throw IoError("bad shape in " + path);
  nf = s.size() == 3 ? s[0].get<int>() : 1;
  n1 = s[s.size() - 2].get<int>();
  n2 = s[s.size() - 1].get<int>();
}

std::string domain_name(Domain d) { return d == Domain::kspace ? "kspace" : "image"; }

Domain parse_domain(const std::string& s, const std::string& path) {
  if (s == "kspace") return Domain::kspace;
  if (s == "image") return Domain::image;
  throw IoError("bad domain '" + s + "' in " + path);
}

}  // namespace

void save_grid(const std::string& stem, const ComplexGrid& g) {
  std::vector<float> buf;
  buf.reserve(g.data.size() * 2);
  for (const auto& z : g.data) {
    buf.push_back(float(z.real()));
    buf.push_back(float(z.imag()));
  }
  write_bytes(stem + ".bin", buf.data(), buf.size() * sizeof(float));
  json j{{"shape", shape_of(g.nf, g.n1, g.n2)},
         {"channels", g.channels},
         {"domain", domain_name(g.domain)},
         {"dtype", "complex64"}};
  write_json_file(stem + ".json", j);
}

ComplexGrid load_grid(const std::string& stem) {
  json j = read_json_file(stem + ".json");
  int nf, n1, n2;
  parse_shape(j.at("shape"), nf, n1, n2, stem + ".json");
  int c = j.at("channels").get<int>();
  Domain d = parse_domain(j.at("domain").get<std::string>(), stem + ".json");
  if (j.value("dtype", "complex64") != std::string("complex64"))
    throw IoError("expected complex64 data in " + stem + ".json");

  auto raw = read_bytes(stem + ".bin");
  ComplexGrid g(c, nf, n1, n2, d);
  if (raw.size() != g.data.size() * 2 * sizeof(float))
    throw IoError("blob size does not match sidecar shape: " + stem + ".bin");
  const float* p = reinterpret_cast<const float*>(raw.data());
  for (std::size_t i = 0; i < g.data.size(); ++i)
    g.data[i] = cdouble(p[2 * i], p[2 * i + 1]);
  return g;
}

void save_real(const std::string& stem, const RealGrid& g) {
  std::vector<float> buf(g.data.begin(), g.data.end());
  write_bytes(stem + ".bin", buf.data(), buf.size() * sizeof(float));
  json j{{"shape", shape_of(g.nf, g.n1, g.n2)},
         {"channels", 1},
         {"domain", "image"},
         {"dtype", "float32"}};
  write_json_file(stem + ".json", j);
}

RealGrid load_real(const std::string& stem) {
  json j = read_json_file(stem + ".json");
  int nf, n1, n2;
  parse_shape(j.at("shape"), nf, n1, n2, stem + ".json");
  if (j.value("dtype", "") != std::string("float32"))
    throw IoError("expected float32 data in " + stem + ".json");
  auto raw = read_bytes(stem + ".bin");
  RealGrid g(nf, n1, n2);
  if (raw.size() != g.data.size() * sizeof(float))
    throw IoError("blob size does not match sidecar shape: " + stem + ".bin");
  const float* p = reinterpret_cast<const float*>(raw.data());
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = p[i];
  return g;
}

void save_mask(const std::string& stem, const MaskGrid& m) {
  write_bytes(stem + ".bin", m.data.data(), m.data.size());
  json j{{"shape", json{m.n1, m.n2}}, {"dtype", "mask8"}};
  write_json_file(stem + ".json", j);
}

MaskGrid load_mask(const std::string& stem) {
  json j = read_json_file(stem + ".json");
  int nf, n1, n2;
  parse_shape(j.at("shape"), nf, n1, n2, stem + ".json");
  if (nf != 1) throw IoError("masks are 2D: " + stem + ".json");
  auto raw = read_bytes(stem + ".bin");
  MaskGrid m(n1, n2);
  if (raw.size() != m.data.size())
    throw IoError("blob size does not match sidecar shape: " + stem + ".bin");
  for (std::size_t i = 0; i < raw.size(); ++i)
    m.data[i] = raw[i] ? 1 : 0;
  return m;
}

void save_masks(const std::string& stem, const SamplingMasks& m) {
  const std::string base = fs::path(stem).filename().string();
  write_bytes(stem + "_sampled.bin", m.m_sampled.data.data(), m.m_sampled.data.size());
  write_bytes(stem + "_pattern.bin", m.m_pattern.data.data(), m.m_pattern.data.size());
  write_bytes(stem + "_acs.bin", m.m_acs.data.data(), m.m_acs.data.size());
  json j{{"shape", json{m.m_sampled.n1, m.m_sampled.n2}},
         {"accel", json{m.r1, m.r2}},
         {"acs_size", json{m.a1, m.a2}},
         {"offsets", json{m.o1, m.o2}},
         {"files",
          json{{"sampled", base + "_sampled.bin"},
               {"pattern", base + "_pattern.bin"},
               {"acs", base + "_acs.bin"}}},
         {"dtype", "mask8"}};
  write_json_file(stem + ".json", j);
}

SamplingMasks load_masks(const std::string& stem) {
  json j = read_json_file(stem + ".json");
  int n1 = j.at("shape")[0].get<int>();
  int n2 = j.at("shape")[1].get<int>();
  SamplingMasks m;
  m.r1 = j.at("accel")[0].get<int>();
  m.r2 = j.at("accel")[1].get<int>();
  m.a1 = j.at("acs_size")[0].get<int>();
  m.a2 = j.at("acs_size")[1].get<int>();
  m.o1 = j.at("offsets")[0].get<int>();
  m.o2 = j.at("offsets")[1].get<int>();

  const fs::path dir = fs::path(stem).parent_path();
  auto load_raster = [&](const std::string& key) {
    std::string file = j.at("files").at(key).get<std::string>();
    auto raw = read_bytes((dir / file).string());
    if (raw.size() != std::size_t(n1) * n2)
      throw IoError("mask raster size mismatch: " + file);
    MaskGrid g(n1, n2);
    for (std::size_t i = 0; i < raw.size(); ++i) g.data[i] = raw[i] ? 1 : 0;
    return g;
  };
  m.m_sampled = load_raster("sampled");
  m.m_pattern = load_raster("pattern");
  m.m_acs = load_raster("acs");
  return m;
}

void save_kernel(const std::string& stem, const GrappaKernel& k) {
  json offs = json::array();
  for (auto [d1, d2] : k.offsets) offs.push_back(json{d1, d2});
  json j{{"accel", json{k.r1, k.r2}},
         {"geometry", json{k.geom.k_fe, k.geom.k_pe1, k.geom.k_pe2}},
         {"lambda", k.lambda},
         {"channels", k.channels},
         {"offsets", offs},
         {"dtype", "complex64"}};
  write_json_file(stem + ".json", j);

  std::vector<float> buf;
  for (const auto& w : k.weights)
    for (const auto& z : w) {
      buf.push_back(float(z.real()));
      buf.push_back(float(z.imag()));
    }
  write_bytes(stem + ".bin", buf.data(), buf.size() * sizeof(float));
}

GrappaKernel load_kernel(const std::string& stem) {
  json j = read_json_file(stem + ".json");
  GrappaKernel k;
  k.r1 = j.at("accel")[0].get<int>();
  k.r2 = j.at("accel")[1].get<int>();
  k.geom.k_fe = j.at("geometry")[0].get<int>();
  k.geom.k_pe1 = j.at("geometry")[1].get<int>();
  k.geom.k_pe2 = j.at("geometry")[2].get<int>();
  k.lambda = j.at("lambda").get<double>();
  k.channels = j.at("channels").get<int>();
  for (const auto& o : j.at("offsets"))
    k.offsets.emplace_back(o[0].get<int>(), o[1].get<int>());

  auto raw = read_bytes(stem + ".bin");
  const std::size_t per = std::size_t(k.channels) * k.source_count();
  if (raw.size() != k.offsets.size() * per * 2 * sizeof(float))
    throw IoError("kernel blob size mismatch: " + stem + ".bin");
  const float* p = reinterpret_cast<const float*>(raw.data());
  for (std::size_t o = 0; o < k.offsets.size(); ++o) {
    std::vector<cdouble> w(per);
    for (std::size_t i = 0; i < per; ++i) {
      w[i] = cdouble(p[0], p[1]);
      p += 2;
    }
    k.weights.push_back(std::move(w));
  }
  return k;
}

void save_checkpoint(const std::string& stem, const Checkpoint& c) {
  json layers = json::array();
  for (const auto& L : c.net.layers)
    layers.push_back(json{{"in", L.in_features},
                          {"out", L.out_features},
                          {"k", L.k},
                          {"act", L.act == Activation::relu ? "relu" : "linear"}});
  json j{{"arch",
          json{{"n_coils", c.arch.n_coils},
               {"widths", c.arch.widths},
               {"residual", c.arch.residual}}},
         {"layers", layers},
         {"norm_scale", c.norm_scale},
         {"dtype", "float64"},
         {"adam", c.adam.has_value()
                      ? json{{"present", true},
                             {"t", c.adam->t},
                             {"lr", c.adam->lr},
                             {"beta1", c.adam->beta1},
                             {"beta2", c.adam->beta2},
                             {"eps", c.adam->eps}}
                      : json{{"present", false}}}};
  write_json_file(stem + ".json", j);

  std::vector<double> buf = c.net.param_vector();
  if (c.adam) {
    buf.insert(buf.end(), c.adam->m.begin(), c.adam->m.end());
    buf.insert(buf.end(), c.adam->v.begin(), c.adam->v.end());
  }
  write_bytes(stem + ".bin", buf.data(), buf.size() * sizeof(double));
}

Checkpoint load_checkpoint(const std::string& stem) {
  json j = read_json_file(stem + ".json");
  Checkpoint c;
  c.arch.n_coils = j.at("arch").at("n_coils").get<int>();
  c.arch.widths = j.at("arch").at("widths").get<std::vector<int>>();
  c.arch.residual = j.at("arch").value("residual", false);
  c.norm_scale = j.at("norm_scale").get<double>();

  c.net.residual = c.arch.residual;
  for (const auto& L : j.at("layers")) {
    Activation act = L.at("act").get<std::string>() == "relu" ? Activation::relu
                                                              : Activation::linear;
    c.net.layers.emplace_back(L.at("in").get<int>(), L.at("out").get<int>(),
                              L.at("k").get<int>(), act);
  }

  auto raw = read_bytes(stem + ".bin");
  const std::size_t np = c.net.param_count();
  const bool has_adam = j.at("adam").at("present").get<bool>();
  const std::size_t want = (has_adam ? 3 * np : np) * sizeof(double);
  if (raw.size() != want)
    throw IoError("checkpoint blob size mismatch: " + stem + ".bin");
  const double* p = reinterpret_cast<const double*>(raw.data());
  c.net.set_params(std::vector<double>(p, p + np));
  if (has_adam) {
    AdamState st(np);
    st.t = j.at("adam").at("t").get<long>();
    st.lr = j.at("adam").at("lr").get<double>();
    st.beta1 = j.at("adam").at("beta1").get<double>();
    st.beta2 = j.at("adam").at("beta2").get<double>();
    st.eps = j.at("adam").at("eps").get<double>();
    std::copy(p + np, p + 2 * np, st.m.begin());
    std::copy(p + 2 * np, p + 3 * np, st.v.begin());
    c.adam = std::move(st);
  }
  return c;
}

void write_pgm16(const std::string& path, const RealGrid& g, double wmin, double wmax) {
  if (g.nf != 1) throw ValueError("pgm output supports single-slice grids only");
  std::string header =
      "P5\n" + std::to_string(g.n2) + " " + std::to_string(g.n1) + "\n65535\n";
  std::vector<std::uint8_t> buf(header.begin(), header.end());
  const double span = wmax - wmin;
  for (int i = 0; i < g.n1; ++i) {
    for (int j = 0; j < g.n2; ++j) {
      unsigned v = 0;
      if (span > 0) {
        double t = (g.at(i, j) - wmin) / span;
        t = t < 0 ? 0 : (t > 1 ? 1 : t);
        v = unsigned(t * 65535.0 + 0.5);
      }
      buf.push_back(std::uint8_t(v >> 8));
      buf.push_back(std::uint8_t(v & 0xff));
    }
  }
  write_bytes(path, buf.data(), buf.size());
}

bool files_identical(const std::string& a, const std::string& b) {
  auto ba = read_bytes(a);
  auto bb = read_bytes(b);
  return ba == bb;
}

}  // namespace apir
