// Thin numpy-facing layer over the reconstruction core. Arrays are copied at
// the boundary; complex grids are [C, H, W] (or [C, F, H, W]) complex128,
// images are float64, masks are uint8.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <cstring>
#include <tuple>
#include <vector>

#include "apir/apirnet.hpp"
#include "apir/dft.hpp"
#include "apir/errors.hpp"
#include "apir/grappa.hpp"
#include "apir/grid.hpp"
#include "apir/masks.hpp"
#include "apir/nn.hpp"
#include "apir/noise_eval.hpp"
#include "apir/phantom.hpp"
#include "apir/signal.hpp"

namespace py = pybind11;
using namespace apir;

namespace {

using carray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;
using darray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using barray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

ComplexGrid grid_from(const carray& a, Domain d) {
  if (a.ndim() == 3) {
    ComplexGrid g(int(a.shape(0)), 1, int(a.shape(1)), int(a.shape(2)), d);
    std::memcpy(g.data.data(), a.data(), g.data.size() * sizeof(cdouble));
    return g;
  }
  if (a.ndim() == 4) {
    ComplexGrid g(int(a.shape(0)), int(a.shape(1)), int(a.shape(2)), int(a.shape(3)), d);
    std::memcpy(g.data.data(), a.data(), g.data.size() * sizeof(cdouble));
    return g;
  }
  throw DimensionError("expected a [C,H,W] or [C,F,H,W] complex array");
}

py::array grid_to(const ComplexGrid& g) {
  std::vector<py::ssize_t> shape =
      g.nf == 1 ? std::vector<py::ssize_t>{g.channels, g.n1, g.n2}
                : std::vector<py::ssize_t>{g.channels, g.nf, g.n1, g.n2};
  py::array_t<std::complex<double>> a(shape);
  std::memcpy(a.mutable_data(), g.data.data(), g.data.size() * sizeof(cdouble));
  return a;
}

RealGrid real_from(const darray& a) {
  if (a.ndim() == 2) {
    RealGrid g(int(a.shape(0)), int(a.shape(1)));
    std::memcpy(g.data.data(), a.data(), g.data.size() * sizeof(double));
    return g;
  }
  if (a.ndim() == 3) {
    RealGrid g(int(a.shape(0)), int(a.shape(1)), int(a.shape(2)));
    std::memcpy(g.data.data(), a.data(), g.data.size() * sizeof(double));
    return g;
  }
  throw DimensionError("expected a [H,W] or [F,H,W] real array");
}

py::array real_to(const RealGrid& g) {
  std::vector<py::ssize_t> shape = g.nf == 1 ? std::vector<py::ssize_t>{g.n1, g.n2}
                                             : std::vector<py::ssize_t>{g.nf, g.n1, g.n2};
  py::array_t<double> a(shape);
  std::memcpy(a.mutable_data(), g.data.data(), g.data.size() * sizeof(double));
  return a;
}

MaskGrid mask_from(const barray& a) {
  if (a.ndim() != 2) throw DimensionError("expected a [H,W] mask array");
  MaskGrid m(int(a.shape(0)), int(a.shape(1)));
  const std::uint8_t* p = a.data();
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = p[i] ? 1 : 0;
  return m;
}

py::array mask_to(const MaskGrid& m) {
  py::array_t<std::uint8_t> a({py::ssize_t(m.n1), py::ssize_t(m.n2)});
  std::memcpy(a.mutable_data(), m.data.data(), m.data.size());
  return a;
}

LevelSchedule schedule_from(const std::vector<std::tuple<int, int, double, int>>& v) {
  LevelSchedule s;
  for (const auto& [k1, k2, lr, epochs] : v) s.levels.push_back({k1, k2, lr, epochs});
  return s;
}

Tensor4 tensor_from(const darray& a) {
  if (a.ndim() != 4) throw DimensionError("expected a [N,C,H,W] array");
  Tensor4 t(int(a.shape(0)), int(a.shape(1)), int(a.shape(2)), int(a.shape(3)));
  std::memcpy(t.data.data(), a.data(), t.data.size() * sizeof(double));
  return t;
}

py::array tensor_to(const Tensor4& t) {
  py::array_t<double> a(
      {py::ssize_t(t.n), py::ssize_t(t.c), py::ssize_t(t.h), py::ssize_t(t.w)});
  std::memcpy(a.mutable_data(), t.data.data(), t.data.size() * sizeof(double));
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "scan-specific parallel MRI reconstruction core";

  py::register_exception<Error>(m, "Error");

  py::class_<SamplingMasks>(m, "SamplingMasks")
      .def_property_readonly("sampled",
                             [](const SamplingMasks& s) { return mask_to(s.m_sampled); })
      .def_property_readonly("pattern",
                             [](const SamplingMasks& s) { return mask_to(s.m_pattern); })
      .def_property_readonly("acs",
                             [](const SamplingMasks& s) { return mask_to(s.m_acs); })
      .def_readonly("r1", &SamplingMasks::r1)
      .def_readonly("r2", &SamplingMasks::r2)
      .def_readonly("a1", &SamplingMasks::a1)
      .def_readonly("a2", &SamplingMasks::a2)
      .def_readonly("o1", &SamplingMasks::o1)
      .def_readonly("o2", &SamplingMasks::o2);

  m.def(
      "make_masks",
      [](int n1, int n2, std::pair<int, int> accel, std::pair<int, int> acs,
         std::pair<int, int> offsets) { return make_masks(n1, n2, accel, acs, offsets); },
      py::arg("n1"), py::arg("n2"), py::arg("accel") = std::pair<int, int>{2, 2},
      py::arg("acs") = std::pair<int, int>{24, 24},
      py::arg("offsets") = std::pair<int, int>{0, 0});

  m.def(
      "simulate_phantom",
      [](int n1, int n2, int coils, std::uint64_t seed, const std::string& kind,
         double radius, double intensity, bool uniform_coils) {
        PhantomSpec spec;
        spec.n1 = n1;
        spec.n2 = n2;
        if (kind == "disk")
          spec.kind = PhantomSpec::Kind::disk;
        else if (kind == "bars")
          spec.kind = PhantomSpec::Kind::bars;
        else
          throw ValueError("kind must be disk or bars");
        spec.radius = radius;
        spec.intensity = intensity;
        const RealGrid ph = make_phantom(spec);
        const MaskGrid sup = phantom_support(spec);
        const CoilProfile cp = make_coils(n1, n2, coils, seed, uniform_coils);
        const ComplexGrid ks = simulate_kspace(ph, cp);
        return py::make_tuple(grid_to(ks), real_to(ph), mask_to(sup));
      },
      py::arg("n1") = 64, py::arg("n2") = 64, py::arg("coils") = 8, py::arg("seed") = 1,
      py::arg("kind") = "disk", py::arg("radius") = 24.0, py::arg("intensity") = 1.0,
      py::arg("uniform_coils") = false);

  m.def(
      "apply_mask",
      [](const carray& k, const barray& mask) {
        return grid_to(apply_mask(grid_from(k, Domain::kspace), mask_from(mask)));
      },
      py::arg("kspace"), py::arg("mask"));

  m.def(
      "add_noise",
      [](const carray& k, const barray& mask, double sigma, std::uint64_t seed) {
        return grid_to(add_noise(grid_from(k, Domain::kspace), mask_from(mask), sigma, seed));
      },
      py::arg("kspace"), py::arg("mask"), py::arg("sigma"), py::arg("seed"));

  m.def(
      "dft_forward",
      [](const carray& img) { return grid_to(dft_forward(grid_from(img, Domain::image))); },
      py::arg("image"));
  m.def(
      "dft_inverse",
      [](const carray& k) { return grid_to(dft_inverse(grid_from(k, Domain::kspace))); },
      py::arg("kspace"));

  m.def(
      "rms_combine",
      [](const carray& img) { return real_to(rms_combine(grid_from(img, Domain::image))); },
      py::arg("image"));
  m.def(
      "reconstruct_image",
      [](const carray& k) { return real_to(reconstruct_image(grid_from(k, Domain::kspace))); },
      py::arg("kspace"));

  m.def(
      "mse",
      [](const darray& a, const darray& b, py::object region) {
        if (region.is_none()) return mse(real_from(a), real_from(b));
        return mse(real_from(a), real_from(b), mask_from(region.cast<barray>()));
      },
      py::arg("recon"), py::arg("reference"), py::arg("region") = py::none());

  m.def(
      "grappa_reconstruct",
      [](const carray& k, const SamplingMasks& masks, std::tuple<int, int, int> geom,
         double lam) {
        GrappaGeometry g{std::get<0>(geom), std::get<1>(geom), std::get<2>(geom)};
        GrappaResult r = grappa_reconstruct(grid_from(k, Domain::kspace), masks, g, lam);
        return py::make_tuple(grid_to(r.kspace), real_to(r.image));
      },
      py::arg("kspace"), py::arg("masks"),
      py::arg("geom") = std::tuple<int, int, int>{1, 5, 5}, py::arg("lam") = 1e-4);

  m.def(
      "apirnet_reconstruct",
      [](const carray& k, const SamplingMasks& masks, std::vector<int> widths,
         const std::vector<std::tuple<int, int, double, int>>& schedule,
         std::uint64_t seed, bool residual, bool reset_optimizer, bool hard_dc) {
        ComplexGrid g = grid_from(k, Domain::kspace);
        ArchitectureSpec arch;
        arch.n_coils = g.channels;
        arch.widths = std::move(widths);
        arch.residual = residual;
        auto [kout, image, run] = apirnet_reconstruct(
            g, masks, arch, schedule_from(schedule), seed, reset_optimizer, hard_dc);
        return py::make_tuple(grid_to(kout), real_to(image), run.loss_trace);
      },
      py::arg("kspace"), py::arg("masks"),
      py::arg("widths") = std::vector<int>{64, 48, 32, 24}, py::arg("schedule"),
      py::arg("seed") = 1, py::arg("residual") = false,
      py::arg("reset_optimizer") = false, py::arg("hard_dc") = false);

  m.def(
      "noise_amplification",
      [](const carray& k, const SamplingMasks& masks, const std::string& method,
         double lam, std::tuple<int, int, int> geom, std::vector<int> widths,
         const std::vector<std::tuple<int, int, double, int>>& schedule, int replicas,
         double sigma, std::uint64_t base_seed, std::uint64_t seed_stride, int threads,
         bool reset_optimizer) {
        ComplexGrid g = grid_from(k, Domain::kspace);
        ReplicaConfig cfg;
        cfg.n_replicas = replicas;
        cfg.sigma = sigma;
        cfg.base_seed = base_seed;
        cfg.seed_stride = seed_stride;
        cfg.threads = threads;
        if (method == "zero")
          cfg.method.method = Method::zero_filled;
        else if (method == "grappa")
          cfg.method.method = Method::grappa;
        else if (method == "apirnet")
          cfg.method.method = Method::apirnet;
        else
          throw ValueError("method must be zero, grappa, or apirnet");
        cfg.method.geom = {std::get<0>(geom), std::get<1>(geom), std::get<2>(geom)};
        cfg.method.lambda = lam;
        cfg.method.arch.n_coils = g.channels;
        cfg.method.arch.widths = std::move(widths);
        cfg.method.schedule = schedule_from(schedule);
        cfg.method.reset_optimizer = reset_optimizer;
        const NoiseMap nm = run_replicas(g, masks, cfg);
        py::dict out;
        out["std"] = real_to(nm.std_map);
        out["amplification"] = real_to(nm.amplification);
        out["mean"] = real_to(nm.mean_image);
        out["reference_std"] = real_to(nm.reference_std);
        return out;
      },
      py::arg("kspace"), py::arg("masks"), py::arg("method") = "grappa",
      py::arg("lam") = 0.0, py::arg("geom") = std::tuple<int, int, int>{1, 5, 5},
      py::arg("widths") = std::vector<int>{64, 48, 32, 24},
      py::arg("schedule") = std::vector<std::tuple<int, int, double, int>>{},
      py::arg("replicas") = 10, py::arg("sigma") = 0.05, py::arg("base_seed") = 1,
      py::arg("seed_stride") = 1, py::arg("threads") = 1,
      py::arg("reset_optimizer") = false);

  m.def(
      "conv2d_periodic",
      [](const darray& x, const darray& w, const darray& b, const std::string& act) {
        if (w.ndim() != 4) throw DimensionError("expected [O,I,k,k] weights");
        const int out_f = int(w.shape(0)), in_f = int(w.shape(1)), k = int(w.shape(2));
        if (int(w.shape(3)) != k) throw DimensionError("kernel must be square");
        Activation a;
        if (act == "linear")
          a = Activation::linear;
        else if (act == "relu")
          a = Activation::relu;
        else
          throw ValueError("act must be linear or relu");
        ConvLayer layer(in_f, out_f, k, a);
        if (b.ndim() != 1 || int(b.shape(0)) != out_f)
          throw DimensionError("bias must be [O]");
        std::memcpy(layer.weights.data(), w.data(), layer.weights.size() * sizeof(double));
        std::memcpy(layer.bias.data(), b.data(), layer.bias.size() * sizeof(double));
        return tensor_to(conv2d_periodic(tensor_from(x), layer));
      },
      py::arg("x"), py::arg("weights"), py::arg("bias"), py::arg("act") = "linear");
}
