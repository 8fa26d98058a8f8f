#include <cmath>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "formats_detail.hpp"
#include "prelabel/errors.hpp"
#include "prelabel/text.hpp"

namespace prelabel::detail {

namespace {

namespace pt = boost::property_tree;

bool is_voc_file(const std::string& name) { return has_suffix(name, ".xml"); }

pt::ptree parse_xml(const std::string& file, const std::string& body) {
  pt::ptree tree;
  std::istringstream in(body);
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(file + ":" + std::to_string(e.line()), e.message());
  }
  return tree;
}

std::optional<double> number(const pt::ptree& node, const char* path) {
  const auto v = node.get_optional<std::string>(path);
  if (!v) return std::nullopt;
  const auto parsed = parse_numbers(*v);
  if (!parsed || parsed->size() != 1) return std::nullopt;
  return parsed->front();
}

}  // namespace

FileMap export_voc(const ExportContext& ctx) {
  FileMap files;
  const auto settings = pt::xml_writer_make_settings<std::string>(' ', 2);
  for (const auto& img : ctx.images) {
    pt::ptree root;
    pt::ptree& ann = root.add_child("annotation", pt::ptree());
    ann.put("filename", img.record.file_name);
    ann.put("size.width", img.record.width);
    ann.put("size.height", img.record.height);
    ann.put("size.depth", 3);
    for (const auto& a : img.annotations) {
      const BBox b = envelope(a.geometry);
      pt::ptree& obj = ann.add_child("object", pt::ptree());
      obj.put("name", a.class_name);
      obj.put("difficult", 0);
      obj.put("bndbox.xmin", std::lround(b.x1));
      obj.put("bndbox.ymin", std::lround(b.y1));
      obj.put("bndbox.xmax", std::lround(b.x2));
      obj.put("bndbox.ymax", std::lround(b.y2));
    }
    std::ostringstream out;
    pt::write_xml(out, root, settings);
    files["Annotations/" + file_stem(img.record.file_name) + ".xml"] = out.str();
  }
  return files;
}

void import_voc(ImportSession& session, const FileMap& files) {
  for (const auto& [name, body] : files) {
    if (!is_voc_file(name)) continue;
    const pt::ptree tree = parse_xml(name, body);
    const auto ann = tree.get_child_optional("annotation");
    if (!ann) throw ParseError(name, "missing <annotation> element");
    const std::string image_name = ann->get<std::string>("filename", name);
    const auto image = session.match_image(image_name);
    std::size_t index = 0;
    for (const auto& [tag, obj] : *ann) {
      if (tag != "object") continue;
      const std::string where = name + ": object " + std::to_string(++index);
      if (!image) {
        session.skip(where, "no image matching '" + image_name + "'");
        continue;
      }
      const auto label = obj.get_optional<std::string>("name");
      const auto x1 = number(obj, "bndbox.xmin");
      const auto y1 = number(obj, "bndbox.ymin");
      const auto x2 = number(obj, "bndbox.xmax");
      const auto y2 = number(obj, "bndbox.ymax");
      if (!label || !x1 || !y1 || !x2 || !y2) {
        throw ParseError(where, "object needs <name> and numeric <bndbox> corners");
      }
      NewAnnotation a;
      a.class_id = session.class_id(*label);
      a.geometry = BBox{*x1, *y1, *x2, *y2};
      session.add(*image, where, std::move(a));
    }
  }
}

void validate_voc(const FileMap& files, std::vector<Diagnostic>& out) {
  std::set<std::string> seen;
  for (const auto& [name, body] : files) {
    if (!is_voc_file(name)) continue;
    pt::ptree tree;
    try {
      tree = parse_xml(name, body);
    } catch (const ParseError& e) {
      out.push_back({name, e.where(), e.what()});
      continue;
    }
    const auto ann = tree.get_child_optional("annotation");
    if (!ann) {
      out.push_back({name, "", "missing <annotation> element"});
      continue;
    }
    const auto filename = ann->get_optional<std::string>("filename");
    if (!filename) out.push_back({name, "", "missing <filename> element"});
    if (!seen.insert(to_lower(file_stem(filename ? *filename : name))).second) {
      out.push_back({name, "", "image listed more than once"});
    }
    if (!ann->get_child_optional("size")) out.push_back({name, "", "missing <size> element"});
    std::size_t index = 0;
    for (const auto& [tag, obj] : *ann) {
      if (tag != "object") continue;
      const std::string loc = "object " + std::to_string(++index);
      if (!obj.get_optional<std::string>("name")) out.push_back({name, loc, "missing <name> element"});
      const auto x1 = number(obj, "bndbox.xmin");
      const auto y1 = number(obj, "bndbox.ymin");
      const auto x2 = number(obj, "bndbox.xmax");
      const auto y2 = number(obj, "bndbox.ymax");
      if (!x1 || !y1 || !x2 || !y2) {
        out.push_back({name, loc, "missing <bndbox> element"});
        continue;
      }
      if (*x1 < 0 || *y1 < 0) out.push_back({name, loc, "negative coordinates"});
      if (*x2 <= *x1 || *y2 <= *y1) out.push_back({name, loc, "degenerate box"});
    }
  }
}

}  // namespace prelabel::detail
