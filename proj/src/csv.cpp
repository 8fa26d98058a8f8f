#include <array>
#include <set>

#include "formats_detail.hpp"
#include "prelabel/errors.hpp"
#include "prelabel/text.hpp"

namespace prelabel::detail {

namespace {

constexpr std::array<const char*, 9> kColumns = {
    "image", "width", "height", "class", "kind", "coords", "detector_score", "verified_score",
    "source"};

enum Column { kImage, kWidth, kHeight, kClass, kKind, kCoords, kDetector, kVerified, kSource };

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<Row> parse_csv(const std::string& file, std::string_view text) {
  std::vector<Row> rows;
  Row row{1, {}};
  std::string field;
  std::size_t line = 1;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty()) throw ParseError(file + ":" + std::to_string(line), "stray quote");
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.fields.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.fields.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      field.clear();
      any = false;
      row = Row{++line, {}};
    } else {
      field += c;
    }
  }
  if (quoted) throw ParseError(file + ":" + std::to_string(line), "unterminated quoted field");
  if (any || !field.empty()) {
    row.fields.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

const std::string* find_csv(const FileMap& files, std::string* name) {
  for (const auto& [n, body] : files) {
    if (has_suffix(n, ".csv")) {
      *name = n;
      return &body;
    }
  }
  return nullptr;
}

std::optional<double> optional_number(const std::string& s, const std::string& where) {
  if (s.empty()) return std::nullopt;
  const auto v = parse_numbers(s);
  if (!v || v->size() != 1) throw ParseError(where, "bad number '" + s + "'");
  return v->front();
}

/// Checks the header and returns the data rows.
std::vector<Row> data_rows(const std::string& file, const std::string& body) {
  auto rows = parse_csv(file, body);
  if (rows.empty()) throw ParseError(file, "empty file");
  const auto& header = rows.front().fields;
  bool ok = header.size() == kColumns.size();
  for (std::size_t i = 0; ok && i < kColumns.size(); ++i) ok = header[i] == kColumns[i];
  if (!ok) throw ParseError(file + ":1", "header must be image,width,height,class,kind,coords,"
                                        "detector_score,verified_score,source");
  rows.erase(rows.begin());
  return rows;
}

std::string score_text(const std::optional<double>& s) { return s ? format_double(*s) : ""; }

}  // namespace

std::string export_csv(const ExportContext& ctx) {
  std::string out;
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    if (i) out += ',';
    out += kColumns[i];
  }
  out += '\n';
  for (const auto& img : ctx.images) {
    for (const auto& a : img.annotations) {
      std::string coords;
      for (double v : geometry_coords(a.geometry)) {
        if (!coords.empty()) coords += ';';
        coords += format_double(v);
      }
      const std::array<std::string, 9> fields = {img.record.file_name,
                                                 std::to_string(img.record.width),
                                                 std::to_string(img.record.height),
                                                 a.class_name,
                                                 std::string(to_string(kind_of(a.geometry))),
                                                 coords,
                                                 score_text(a.detector_score),
                                                 score_text(a.verified_score),
                                                 std::string(to_string(a.source))};
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += quote(fields[i]);
      }
      out += '\n';
    }
  }
  return out;
}

void import_csv(ImportSession& session, const FileMap& files) {
  std::string name;
  const std::string* body = find_csv(files, &name);
  if (!body) throw ParseError("bundle", "no CSV file");
  for (const auto& row : data_rows(name, *body)) {
    const std::string where = name + ":" + std::to_string(row.line);
    const auto& f = row.fields;
    if (f.size() != kColumns.size()) {
      throw ParseError(where, "expected " + std::to_string(kColumns.size()) + " fields");
    }
    const auto image = session.match_image(f[kImage]);
    if (!image) {
      session.skip(where, "no image matching '" + f[kImage] + "'");
      continue;
    }
    NewAnnotation a;
    try {
      const auto coords = parse_numbers(f[kCoords], ';');
      if (!coords) throw ParseError(where, "bad coords '" + f[kCoords] + "'");
      a.geometry = geometry_from_coords(parse_geometry_kind(f[kKind]), *coords);
      a.source = parse_source(f[kSource]);
    } catch (const InputError& e) {
      throw ParseError(where, e.what());
    }
    a.detector_score = optional_number(f[kDetector], where);
    a.verified_score = optional_number(f[kVerified], where);
    a.class_id = session.class_id(f[kClass]);
    session.add(*image, where, std::move(a));
  }
}

void validate_csv(const FileMap& files, std::vector<Diagnostic>& out) {
  std::string name;
  const std::string* body = find_csv(files, &name);
  if (!body) {
    out.push_back({"", "", "missing CSV file"});
    return;
  }
  std::vector<Row> rows;
  try {
    rows = data_rows(name, *body);
  } catch (const ParseError& e) {
    out.push_back({name, e.where(), e.what()});
    return;
  }
  for (const auto& row : rows) {
    const std::string loc = "line " + std::to_string(row.line);
    const auto& f = row.fields;
    if (f.size() != kColumns.size()) {
      out.push_back({name, loc, "wrong number of fields"});
      continue;
    }
    if (normalize_label(f[kClass]).empty()) out.push_back({name, loc, "empty class name"});
    Geometry g;
    try {
      const auto coords = parse_numbers(f[kCoords], ';');
      if (!coords) {
        out.push_back({name, loc, "bad coords"});
        continue;
      }
      g = geometry_from_coords(parse_geometry_kind(f[kKind]), *coords);
      parse_source(f[kSource]);
    } catch (const InputError& e) {
      out.push_back({name, loc, e.what()});
      continue;
    }
    const BBox env = envelope(g);
    if (env.x1 < 0 || env.y1 < 0) out.push_back({name, loc, "negative coordinates"});
    const bool ok = std::visit([](const auto& x) { return x.valid(); }, g);
    if (!ok) out.push_back({name, loc, "degenerate box"});
    for (int c : {kDetector, kVerified}) {
      const auto v = f[c].empty() ? std::optional<std::vector<double>>(std::vector<double>{0.0})
                                  : parse_numbers(f[c]);
      if (!v || v->size() != 1 || v->front() < 0 || v->front() > 1) {
        out.push_back({name, loc, std::string(kColumns[c]) + " out of [0,1]"});
      }
    }
  }
}

}  // namespace prelabel::detail
