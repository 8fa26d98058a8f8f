#include <charconv>
#include <cmath>
#include <set>

#include <yaml-cpp/yaml.h>

#include "formats_detail.hpp"
#include "prelabel/errors.hpp"
#include "prelabel/text.hpp"

namespace prelabel::detail {

namespace {

const char* const kYaml = "data.yaml";

void put(std::string& line, double v) {
  line += ' ';
  line += format_double(v);
}

void put_point(std::string& line, Point p, const ImageRecord& img) {
  put(line, p.x / img.width);
  put(line, p.y / img.height);
}

std::map<long, std::string> read_names(const std::string& body) {
  std::map<long, std::string> names;
  YAML::Node root;
  try {
    root = YAML::Load(body);
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string(kYaml) + ":" + std::to_string(e.mark.line + 1), e.msg);
  }
  const YAML::Node n = root["names"];
  if (!n) throw ParseError(kYaml, "missing names mapping");
  try {
    if (n.IsSequence()) {
      for (std::size_t i = 0; i < n.size(); ++i) names[static_cast<long>(i)] = n[i].as<std::string>();
    } else if (n.IsMap()) {
      for (const auto& kv : n) names[kv.first.as<long>()] = kv.second.as<std::string>();
    } else {
      throw ParseError(kYaml, "names must be a list or mapping");
    }
  } catch (const YAML::Exception& e) {
    throw ParseError(kYaml, e.msg);
  }
  return names;
}

bool is_label_file(const std::string& name) {
  return has_suffix(name, ".txt") && file_stem(name) != "classes";
}

std::optional<long> parse_index(const std::string& token) {
  long v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) return std::nullopt;
  return v;
}

std::pair<std::string, std::string> split_head(const std::string& line) {
  const auto start = line.find_first_not_of(" \t");
  if (start == std::string::npos) return {"", ""};
  const auto end = line.find_first_of(" \t", start);
  if (end == std::string::npos) return {line.substr(start), ""};
  return {line.substr(start, end - start), line.substr(end)};
}

}  // namespace

FileMap export_yolo(const ExportContext& ctx) {
  FileMap files;
  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "nc" << YAML::Value << ctx.class_names.size();
  y << YAML::Key << "names" << YAML::Value << YAML::BeginMap;
  for (std::size_t i = 0; i < ctx.class_names.size(); ++i) {
    y << YAML::Key << i << YAML::Value << ctx.class_names[i];
  }
  y << YAML::EndMap << YAML::EndMap;
  files[kYaml] = std::string(y.c_str()) + "\n";

  const bool obb_project = ctx.project.mode == ProjectMode::obb;
  for (const auto& img : ctx.images) {
    std::string body;
    for (const auto& a : img.annotations) {
      std::string line = std::to_string(ctx.class_index(a.class_name));
      if (const auto* b = std::get_if<BBox>(&a.geometry)) {
        if (obb_project) {
          for (Point p : {Point{b->x1, b->y1}, Point{b->x2, b->y1}, Point{b->x2, b->y2},
                          Point{b->x1, b->y2}}) {
            put_point(line, p, img.record);
          }
        } else {
          put(line, (b->x1 + b->x2) / 2 / img.record.width);
          put(line, (b->y1 + b->y2) / 2 / img.record.height);
          put(line, b->width() / img.record.width);
          put(line, b->height() / img.record.height);
        }
      } else if (const auto* o = std::get_if<OrientedBox>(&a.geometry)) {
        for (Point p : o->corners()) put_point(line, p, img.record);
      } else {
        for (Point p : std::get<Polygon>(a.geometry).points) put_point(line, p, img.record);
      }
      body += line + "\n";
    }
    files["labels/" + file_stem(img.record.file_name) + ".txt"] = std::move(body);
  }
  return files;
}

void import_yolo(ImportSession& session, const FileMap& files) {
  const auto yaml_it = files.find(kYaml);
  if (yaml_it == files.end()) throw ParseError(kYaml, "missing data.yaml");
  const auto names = read_names(yaml_it->second);
  for (const auto& [index, name] : names) session.class_id(name);

  for (const auto& [name, body] : files) {
    if (!is_label_file(name)) continue;
    const auto image = session.match_image(name);
    const auto lines = lines_of(body);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      const auto [head, rest] = split_head(lines[ln]);
      if (head.empty()) continue;
      const std::string where = name + ":" + std::to_string(ln + 1);
      if (!image) {
        session.skip(where, "no image matching '" + file_stem(name) + "'");
        continue;
      }
      const auto index = parse_index(head);
      const auto values = parse_numbers(rest);
      if (!index || !values) throw ParseError(where, "expected a class index and numbers");
      const auto name_it = names.find(*index);
      if (name_it == names.end()) {
        session.skip(where, "unknown class index");
        continue;
      }
      const auto& v = *values;
      const double w = image->width;
      const double h = image->height;
      NewAnnotation ann;
      if (v.size() == 4) {
        ann.geometry = BBox{(v[0] - v[2] / 2) * w, (v[1] - v[3] / 2) * h, (v[0] + v[2] / 2) * w,
                            (v[1] + v[3] / 2) * h};
      } else if (v.size() % 2 == 0 && v.size() >= 6 && session.mode() != ProjectMode::detection) {
        std::vector<Point> pts;
        for (std::size_t i = 0; i < v.size(); i += 2) pts.push_back({v[i] * w, v[i + 1] * h});
        if (session.mode() == ProjectMode::obb) {
          if (pts.size() != 4) {
            session.skip(where, "oriented boxes need 4 corners");
            continue;
          }
          ann.geometry = min_area_obb(pts);
        } else {
          ann.geometry = Polygon{std::move(pts)};
        }
      } else {
        session.skip(where, "geometry not supported by project mode");
        continue;
      }
      ann.class_id = session.class_id(name_it->second);
      session.add(*image, where, std::move(ann));
    }
  }
}

void validate_yolo(const FileMap& files, std::vector<Diagnostic>& out) {
  std::map<long, std::string> names;
  const auto yaml_it = files.find(kYaml);
  if (yaml_it == files.end()) {
    out.push_back({kYaml, "", "missing data.yaml"});
  } else {
    try {
      names = read_names(yaml_it->second);
    } catch (const ParseError& e) {
      out.push_back({kYaml, e.where(), e.what()});
    }
  }
  std::set<std::string> stems;
  for (const auto& [name, body] : files) {
    if (!is_label_file(name)) continue;
    if (!stems.insert(to_lower(file_stem(name))).second) {
      out.push_back({name, "", "image listed more than once"});
    }
    const auto lines = lines_of(body);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      const auto [head, rest] = split_head(lines[ln]);
      if (head.empty()) continue;
      const std::string loc = "line " + std::to_string(ln + 1);
      const auto index = parse_index(head);
      const auto values = parse_numbers(rest);
      if (!index || !values) {
        out.push_back({name, loc, "expected a class index and numbers"});
        continue;
      }
      if (!names.empty() && !names.count(*index)) out.push_back({name, loc, "unknown class index"});
      const auto& v = *values;
      if (v.size() != 4 && (v.size() < 6 || v.size() % 2 != 0)) {
        out.push_back({name, loc, "wrong number of values"});
        continue;
      }
      for (double x : v) {
        if (x < 0 || x > 1) {
          out.push_back({name, loc, "value out of [0,1]"});
          break;
        }
      }
      if (v.size() == 4 && (v[2] <= 0 || v[3] <= 0)) out.push_back({name, loc, "degenerate box"});
    }
  }
}

}  // namespace prelabel::detail
