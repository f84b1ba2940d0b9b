#include "ssg/image_io.hpp"

#include "ssg/error.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

namespace ssg {

namespace fs = std::filesystem;

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return r;
  }
  return v;
}

std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

} // namespace

void write_file_atomic(const fs::path &path, const std::string &bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  static std::atomic<unsigned long> counter{0};
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

void write_imgf64(const fs::path &path, const ImageGrid &img) {
  std::string bytes = "IMGF64 " + std::to_string(img.side()) + "\n";
  const std::size_t header = bytes.size();
  bytes.resize(header + 8 * img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint64_t le = to_little(std::bit_cast<std::uint64_t>(img.data()[i]));
    std::memcpy(bytes.data() + header + 8 * i, &le, 8);
  }
  write_file_atomic(path, bytes);
}

ImageGrid read_imgf64(const fs::path &path) {
  const std::string bytes = slurp(path);
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos || bytes.compare(0, 7, "IMGF64 ") != 0) {
    throw IoError(path.string() + ": missing IMGF64 header");
  }
  std::size_t N = 0;
  try {
    N = std::stoul(bytes.substr(7, nl - 7));
  } catch (const std::exception &) {
    throw IoError(path.string() + ": malformed IMGF64 header");
  }
  const std::size_t n = N * N;
  if (N < 1 || bytes.size() != nl + 1 + 8 * n) throw IoError(path.string() + ": payload size does not match N");
  Vector data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t le;
    std::memcpy(&le, bytes.data() + nl + 1 + 8 * i, 8);
    data[i] = std::bit_cast<double>(to_little(le));
  }
  return ImageGrid(N, std::move(data));
}

void write_pgm(const fs::path &path, const ImageGrid &img, bool binary, int maxval) {
  if (maxval != 255 && maxval != 65535) throw ConfigError("write_pgm: maxval must be 255 or 65535");
  const double lo = img.min(), hi = img.max();
  const double range = hi > lo ? hi - lo : 1.0;
  const std::size_t N = img.side();
  std::ostringstream os;
  os << (binary ? "P5" : "P2") << "\n" << N << " " << N << "\n" << maxval << "\n";
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t i = 0; i < N; ++i) {
      const auto q = static_cast<unsigned>(std::lround((img.at(i, j) - lo) / range * maxval));
      if (binary) {
        if (maxval > 255) os.put(static_cast<char>(q >> 8));
        os.put(static_cast<char>(q & 0xffu));
      } else {
        os << q << (i + 1 == N ? '\n' : ' ');
      }
    }
  }
  write_file_atomic(path, os.str());
}

ImageGrid read_pgm(const fs::path &path) {
  const std::string bytes = slurp(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw IoError(path.string() + ": truncated PGM");
    return bytes.substr(start, pos - start);
  };
  const std::string magic = next_token();
  if (magic != "P2" && magic != "P5") throw IoError(path.string() + ": not a PGM (P2/P5) file");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(next_token());
    h = std::stoul(next_token());
    maxval = std::stoul(next_token());
  } catch (const std::invalid_argument &) {
    throw IoError(path.string() + ": malformed PGM header");
  }
  if (w != h || w < 2) throw IoError(path.string() + ": only square images are supported");
  if (maxval == 0 || maxval > 65535) throw IoError(path.string() + ": bad maxval");
  ImageGrid img(w);
  if (magic == "P2") {
    for (std::size_t l = 0; l < w * h; ++l) img.data()[l] = std::stod(next_token());
  } else {
    ++pos; // single whitespace after maxval
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (bytes.size() < pos + bpp * w * h) throw IoError(path.string() + ": truncated PGM payload");
    for (std::size_t l = 0; l < w * h; ++l) {
      const auto *p = reinterpret_cast<const unsigned char *>(bytes.data() + pos + bpp * l);
      img.data()[l] = bpp == 2 ? static_cast<double>((p[0] << 8) | p[1]) : static_cast<double>(p[0]);
    }
  }
  return img;
}

} // namespace ssg
