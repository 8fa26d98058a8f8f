#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "prelabel/errors.hpp"
#include "prelabel/formats.hpp"
#include "prelabel/mock_providers.hpp"
#include "prelabel/postprocess.hpp"
#include "prelabel/preannotator.hpp"
#include "prelabel/store.hpp"
#include "prelabel/synthetic.hpp"
#include "prelabel/text.hpp"

namespace py = pybind11;
using namespace prelabel;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

using Box = std::array<double, 4>;
using Xy = std::pair<double, double>;

BBox to_box(const Box& b) { return {b[0], b[1], b[2], b[3]}; }
Box from_box(const BBox& b) { return {b.x1, b.y1, b.x2, b.y2}; }

Polygon to_polygon(const std::vector<Xy>& pts) {
  Polygon p;
  for (const auto& [x, y] : pts) p.points.push_back({x, y});
  return p;
}

std::vector<Xy> from_points(std::span<const Point> pts) {
  std::vector<Xy> out;
  for (const auto& p : pts) out.emplace_back(p.x, p.y);
  return out;
}

py::dict from_obb(const OrientedBox& o) {
  py::dict d;
  d["cx"] = o.cx;
  d["cy"] = o.cy;
  d["w"] = o.w;
  d["h"] = o.h;
  d["theta"] = o.theta;
  return d;
}

BinaryMask to_mask(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw InputError("mask must be a 2-D array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  BinaryMask m(w, h);
  const auto r = a.unchecked<2>();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, r(y, x) != 0);
  }
  return m;
}

py::array_t<std::uint8_t> from_mask(const BinaryMask& m) {
  py::array_t<std::uint8_t> a({m.height(), m.width()});
  auto r = a.mutable_unchecked<2>();
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) r(y, x) = m.at(x, y) ? 1 : 0;
  }
  return a;
}

PipelineSettings settings_of(const py::object& o) {
  return o.is_none() ? PipelineSettings{} : settings_from_json(from_python(o));
}

Providers mock_for(const std::vector<std::string>& vocabulary, std::uint64_t seed,
                   double mislabel_probability) {
  MockConfig c;
  c.classes = vocabulary;
  c.seed = seed;
  c.mislabel_probability = mislabel_probability;
  return make_mock_providers(std::move(c));
}

std::vector<std::string> class_names(const Store& store, std::int64_t project) {
  std::vector<std::string> out;
  for (const auto& c : store.classes(project)) out.push_back(c.name);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pre-annotation core: geometry, post-processing, pipeline, store and formats.";

  static py::exception<ParseError> parse_error(m, "ParseError", PyExc_ValueError);
  static py::exception<NotFoundError> not_found(m, "NotFoundError", PyExc_LookupError);
  static py::exception<ConflictError> conflict(m, "ConflictError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      py::set_error(parse_error, e.what());
    } catch (const NotFoundError& e) {
      py::set_error(not_found, e.what());
    } catch (const ConflictError& e) {
      py::set_error(conflict, e.what());
    }
  });

  // geometry
  m.def("iou", [](const Box& a, const Box& b) { return iou(to_box(a), to_box(b)); });
  m.def("union_box", [](const std::vector<Box>& boxes) {
    std::vector<BBox> bs;
    for (const auto& b : boxes) bs.push_back(to_box(b));
    return from_box(union_box(bs));
  });
  m.def("min_area_obb", [](const std::vector<Xy>& pts) {
    return from_obb(min_area_obb(to_polygon(pts).points));
  });
  m.def("obb_corners", [](double cx, double cy, double w, double h, double theta) {
    const auto c = OrientedBox{cx, cy, w, h, theta}.corners();
    return from_points(c);
  });
  m.def("rdp_simplify", [](const std::vector<Xy>& pts, double epsilon) {
    return from_points(rdp_simplify(to_polygon(pts), epsilon).points);
  });
  m.def("polygon_area", [](const std::vector<Xy>& pts) { return polygon_area(to_polygon(pts)); });
  m.def("polygon_perimeter",
        [](const std::vector<Xy>& pts) { return polygon_perimeter(to_polygon(pts)); });
  m.def("normalize_label", [](const std::string& s) { return normalize_label(s); });

  // verification and clustering
  m.def("softmax", [](const std::vector<double>& s, double temperature) {
    return softmax(s, temperature);
  }, py::arg("similarities"), py::arg("temperature") = 1.0);
  m.def("cluster_components", [](const std::vector<Box>& boxes, double threshold) {
    std::vector<BBox> bs;
    for (const auto& b : boxes) bs.push_back(to_box(b));
    return build_cluster_graph(bs, threshold).components;
  }, py::arg("boxes"), py::arg("iou_threshold") = 0.9);

  // masks
  m.def("close_mask", [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a,
                         int max_iterations) { return from_mask(close_mask(to_mask(a), max_iterations)); },
        py::arg("mask"), py::arg("max_iterations") = kMaxClosingIterations);
  m.def("count_holes", [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    return count_holes(to_mask(a));
  });
  m.def("mask_to_polygons",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
          std::vector<std::vector<Xy>> out;
          for (const auto& p : mask_to_polygons(to_mask(a))) out.push_back(from_points(p.points));
          return out;
        });

  // synthetic data
  m.def("write_synthetic_dataset",
        [](const std::filesystem::path& dir, std::size_t count, std::uint64_t seed,
           const std::vector<std::string>& classes) {
          return write_synthetic_dataset(dir, count, seed, classes).size();
        },
        py::arg("directory"), py::arg("count"), py::arg("seed"), py::arg("classes"));

  // bundles without a store
  m.def("validate_bundle", [](const std::string& format, const std::map<std::string, py::bytes>& files) {
    FileMap f;
    for (const auto& [k, v] : files) f[k] = std::string(v);
    return to_python(to_json(validate_bundle(parse_export_format(format), f)));
  });
  m.def("write_zip", [](const std::map<std::string, py::bytes>& files) {
    FileMap f;
    for (const auto& [k, v] : files) f[k] = std::string(v);
    return py::bytes(write_zip(f));
  });
  m.def("read_zip", [](const py::bytes& data) {
    std::map<std::string, py::bytes> out;
    for (const auto& [k, v] : read_zip(std::string(data))) out[k] = py::bytes(v);
    return out;
  });

  py::class_<Store>(m, "Store")
      .def(py::init<std::filesystem::path>(), py::arg("data_dir"))
      .def("create_project",
           [](Store& s, const std::string& name, const std::string& mode,
              const std::vector<std::string>& classes, const py::object& settings) {
             return s.create_project(name, parse_project_mode(mode), classes, settings_of(settings)).id;
           },
           py::arg("name"), py::arg("mode") = "detection", py::arg("classes"),
           py::arg("settings") = py::none())
      .def("find_project",
           [](const Store& s, const std::string& name) -> std::optional<std::int64_t> {
             const auto p = s.find_project(name);
             return p ? std::optional(p->id) : std::nullopt;
           })
      .def("classes", &class_names)
      .def("add_image", [](Store& s, std::int64_t project, const std::filesystem::path& path) {
        return s.add_image(project, path).id;
      })
      .def("add_folder",
           [](Store& s, std::int64_t project, const std::filesystem::path& dir) {
             std::vector<std::filesystem::path> files;
             for (const auto& e : std::filesystem::directory_iterator(dir)) {
               if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
             }
             std::sort(files.begin(), files.end());
             std::vector<std::int64_t> ids;
             for (const auto& f : files) ids.push_back(s.add_image(project, f).id);
             return ids;
           })
      .def("annotation_count",
           [](const Store& s, std::int64_t project) {
             std::size_t n = 0;
             for (const auto& img : s.images(project)) n += s.annotations(img.id).size();
             return n;
           })
      .def("preannotate",
           [](Store& s, std::int64_t project, std::uint64_t seed, const py::object& settings,
              unsigned threads) {
             const Project p = s.project(project);
             PipelineSettings ps = settings.is_none() ? p.settings : settings_of(settings);
             BatchOptions options;
             options.threads = threads;
             BatchReport r;
             {
               py::gil_scoped_release release;
               r = preannotate_batch(s, project, ps, mock_for(class_names(s, project), seed, 0.0),
                                     options);
             }
             return to_python(to_json(r));
           },
           py::arg("project"), py::arg("seed") = 0, py::arg("settings") = py::none(),
           py::arg("threads") = 0)
      .def("export",
           [](const Store& s, std::int64_t project, const std::string& format, bool boxes_only,
              bool include_pending) {
             ExportOptions o;
             o.policy = boxes_only ? GeometryPolicy::boxes_only : GeometryPolicy::as_stored;
             o.include_pending = include_pending;
             std::map<std::string, py::bytes> out;
             for (const auto& [k, v] : export_project(s, project, parse_export_format(format), o).files) {
               out[k] = py::bytes(v);
             }
             return out;
           },
           py::arg("project"), py::arg("format"), py::arg("boxes_only") = false,
           py::arg("include_pending") = false)
      .def("import_annotations",
           [](Store& s, std::int64_t project, const std::string& format,
              const std::map<std::string, py::bytes>& files) {
             FileMap f;
             for (const auto& [k, v] : files) f[k] = std::string(v);
             return to_python(to_json(import_annotations(s, project, parse_export_format(format), f)));
           })
      .def("stats", [](const Store& s, std::int64_t project) {
        return to_python(to_json(s.compute_stats(project)));
      });
}
