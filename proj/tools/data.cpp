#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>

#include "app.hpp"
#include "ghho/errors.hpp"
#include "ghho/image.hpp"

namespace ghho::app {

namespace {

std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), issp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), issp).base(), s.end());
  return s;
}

std::optional<int> parse_label(std::string s) {
  s = trim(s);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "yes" || s == "1") return 1;
  if (s == "no" || s == "0") return 0;
  return std::nullopt;
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

bool load_into(Sample& s, const fs::path& file, int size, std::ostream& warn, IngestStats& stats) {
  try {
    s.image = pad_and_resize(read_image(file), size);
    ++stats.loaded;
    return true;
  } catch (const DataError& e) {
    warn << "warning: skipping " << file.string() << ": " << e.what() << '\n';
    ++stats.skipped;
    return false;
  }
}

void summarize(const IngestStats& stats, std::ostream& warn) {
  if (stats.skipped > 0) warn << "warning: skipped " << stats.skipped << " unreadable file(s), loaded " << stats.loaded << '\n';
  if (stats.loaded == 0) throw DataError("no usable images");
}

}  // namespace

Dataset ingest(const fs::path& dir, const std::optional<fs::path>& labels, int size, std::ostream& warn,
               IngestStats* stats_out) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  IngestStats stats;
  Dataset data;
  if (labels) {
    std::ifstream in(*labels);
    if (!in) throw DataError("cannot read labels file " + labels->string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      const auto comma = line.rfind(',');
      if (comma == std::string::npos) throw DataError("labels line " + std::to_string(lineno) + ": expected filename,label");
      const std::string name = trim(line.substr(0, comma));
      const auto label = parse_label(line.substr(comma + 1));
      if (!label) {
        if (lineno == 1) continue;  // header
        throw DataError("labels line " + std::to_string(lineno) + ": label must be yes/no or 1/0");
      }
      Sample s;
      s.id = name;
      s.label = *label;
      if (load_into(s, dir / name, size, warn, stats)) data.items.push_back(std::move(s));
    }
  } else {
    const bool has_yes = fs::is_directory(dir / "yes"), has_no = fs::is_directory(dir / "no");
    if (!has_yes && !has_no) throw DataError("no labels file and no yes/ or no/ folders in " + dir.string());
    for (const auto& [folder, label] : {std::pair{"yes", 1}, std::pair{"no", 0}}) {
      if (!fs::is_directory(dir / folder)) continue;
      for (const auto& file : sorted_files(dir / folder)) {
        Sample s;
        s.id = fs::relative(file, dir).generic_string();
        s.label = label;
        if (load_into(s, file, size, warn, stats)) data.items.push_back(std::move(s));
      }
    }
  }
  summarize(stats, warn);
  if (stats_out) *stats_out = stats;
  return data;
}

Dataset ingest_unlabelled(const std::vector<fs::path>& inputs, int size, std::ostream& warn, IngestStats* stats_out) {
  IngestStats stats;
  Dataset data;
  for (const auto& input : inputs) {
    std::vector<fs::path> files;
    if (fs::is_directory(input)) files = sorted_files(input);
    else if (fs::exists(input)) files.push_back(input);
    else throw DataError("no such file or directory: " + input.string());
    for (const auto& file : files) {
      Sample s;
      s.id = fs::is_directory(input) ? fs::relative(file, input).generic_string() : file.filename().string();
      if (load_into(s, file, size, warn, stats)) data.items.push_back(std::move(s));
    }
  }
  summarize(stats, warn);
  if (stats_out) *stats_out = stats;
  return data;
}

GrayImage apply_op(const GrayImage& image, const AugmentOp& op) {
  switch (op.kind) {
    case AugmentOp::Kind::rotate90: return rotate90(image);
    case AugmentOp::Kind::rotate180: return rotate180(image);
    case AugmentOp::Kind::rotate270: return rotate270(image);
    case AugmentOp::Kind::flip_h: return flip_horizontal(image);
    case AugmentOp::Kind::flip_v: return flip_vertical(image);
    case AugmentOp::Kind::brightness: return adjust_brightness(image, op.delta);
  }
  return image;
}

Dataset augment(const Dataset& data, const AugmentRecipe& recipe) {
  Dataset out;
  out.items.reserve(data.items.size() * recipe.multiplier());
  for (const auto& item : data.items) {
    const std::string stem = fs::path(item.id).replace_extension().generic_string();
    if (recipe.include_original) out.items.push_back(item);
    for (const auto& op : recipe.ops) {
      Sample s;
      s.id = stem + "_" + op.name();
      s.label = item.label;
      s.split = item.split;
      s.image = apply_op(item.image, op);
      out.items.push_back(std::move(s));
    }
  }
  return out;
}

void write_dataset(const Dataset& data, const fs::path& dir) {
  for (const auto& item : data.items) {
    std::string flat = item.id;
    for (const char* prefix : {"yes/", "no/"})
      if (flat.rfind(prefix, 0) == 0) flat.erase(0, std::char_traits<char>::length(prefix));
    std::replace(flat.begin(), flat.end(), '/', '_');
    std::string ext = fs::path(flat).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".png" || ext == ".jpg" || ext == ".jpeg") flat.resize(flat.size() - ext.size());
    const fs::path folder = dir / (item.label == 1 ? "yes" : "no");
    fs::create_directories(folder);
    write_pgm(folder / (flat + ".pgm"), item.image);
  }
}

}  // namespace ghho::app
