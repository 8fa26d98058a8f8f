#include <cstring>

#include <zlib.h>

#include "prelabel/errors.hpp"
#include "prelabel/formats.hpp"

namespace prelabel {

namespace {

// 1980-01-01 00:00:00 in DOS format, so archives depend only on content.
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;

void put16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xff);
  out += static_cast<char>(v >> 8);
}

void put32(std::string& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v & 0xffff));
  put16(out, static_cast<std::uint16_t>(v >> 16));
}

std::uint32_t get(std::string_view b, std::size_t at, int bytes) {
  if (at + bytes > b.size()) throw ParseError("zip", "truncated archive");
  std::uint32_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[at + i]);
  return v;
}

std::uint32_t crc_of(std::string_view data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - done, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data() + done), chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string inflate_raw(std::string_view in, std::size_t expected, const std::string& name) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw ParseError(name, "inflate init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) throw ParseError(name, "corrupt deflate data");
  return out;
}

}  // namespace

std::string write_zip(const FileMap& files) {
  std::string out;
  std::string central;
  std::uint16_t count = 0;
  for (const auto& [name, data] : files) {
    const std::uint32_t offset = static_cast<std::uint32_t>(out.size());
    const std::uint32_t crc = crc_of(data);
    const auto size = static_cast<std::uint32_t>(data.size());

    put32(out, 0x04034b50);
    put16(out, 20);
    put16(out, 0);
    put16(out, 0);
    put16(out, kDosTime);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, static_cast<std::uint16_t>(name.size()));
    put16(out, 0);
    out += name;
    out += data;

    put32(central, 0x02014b50);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosTime);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, static_cast<std::uint16_t>(name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += name;
    ++count;
  }
  const auto central_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, 0x06054b50);
  put16(out, 0);
  put16(out, 0);
  put16(out, count);
  put16(out, count);
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, central_offset);
  put16(out, 0);
  return out;
}

FileMap read_zip(std::string_view b) {
  if (b.size() < 22) throw ParseError("zip", "too short for a zip archive");
  std::size_t eocd = b.size() - 22;
  while (get(b, eocd, 4) != 0x06054b50) {
    if (eocd == 0 || b.size() - eocd > 22 + 0xffff) {
      throw ParseError("zip", "end of central directory not found");
    }
    --eocd;
  }
  const std::uint32_t entries = get(b, eocd + 10, 2);
  std::size_t at = get(b, eocd + 16, 4);
  FileMap files;
  for (std::uint32_t i = 0; i < entries; ++i) {
    if (get(b, at, 4) != 0x02014b50) throw ParseError("zip", "bad central directory entry");
    const std::uint32_t method = get(b, at + 10, 2);
    const std::uint32_t crc = get(b, at + 16, 4);
    const std::uint32_t csize = get(b, at + 20, 4);
    const std::uint32_t usize = get(b, at + 24, 4);
    const std::uint32_t name_len = get(b, at + 28, 2);
    const std::uint32_t extra_len = get(b, at + 30, 2);
    const std::uint32_t comment_len = get(b, at + 32, 2);
    const std::uint32_t local = get(b, at + 42, 4);
    if (at + 46 + name_len > b.size()) throw ParseError("zip", "truncated archive");
    std::string name(b.substr(at + 46, name_len));
    at += 46 + name_len + extra_len + comment_len;

    if (get(b, local, 4) != 0x04034b50) throw ParseError(name, "bad local header");
    const std::size_t data_at = local + 30 + get(b, local + 26, 2) + get(b, local + 28, 2);
    if (data_at + csize > b.size()) throw ParseError(name, "truncated entry");
    const std::string_view raw = b.substr(data_at, csize);
    if (!name.empty() && name.back() == '/') continue;
    std::string data;
    if (method == 0) {
      data = std::string(raw);
    } else if (method == 8) {
      data = inflate_raw(raw, usize, name);
    } else {
      throw ParseError(name, "unsupported compression method " + std::to_string(method));
    }
    if (crc_of(data) != crc) throw ParseError(name, "CRC mismatch");
    files[name] = std::move(data);
  }
  return files;
}

}  // namespace prelabel
