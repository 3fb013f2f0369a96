#include "dualmem/io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace dualmem {

namespace {

std::string lowercase_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace

Trajectory read_tum(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_tum: cannot open " + path);
  Trajectory traj;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw IoError("read_tum: malformed line " + std::to_string(lineno) + " in " + path);
    TrajectoryPose p;
    p.timestamp = ts;
    p.translation = {tx, ty, tz};
    p.rotation = Eigen::Quaterniond(qw, qx, qy, qz);
    const double n = p.rotation.norm();
    if (n <= 0.0)
      throw IoError("read_tum: zero quaternion at line " + std::to_string(lineno) + " in " + path);
    p.rotation.normalize();
    traj.push_back(p);
  }
  return traj;
}

void write_tum(const std::string& path, const Trajectory& traj) {
  std::ofstream f(path);
  if (!f) throw IoError("write_tum: cannot open " + path);
  f.precision(17);
  f << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& p : traj) {
    f << p.timestamp << ' ' << p.translation.x() << ' ' << p.translation.y() << ' '
      << p.translation.z() << ' ' << p.rotation.x() << ' ' << p.rotation.y() << ' '
      << p.rotation.z() << ' ' << p.rotation.w() << '\n';
  }
  if (!f) throw IoError("write_tum: write failed for " + path);
}

CloudData read_ply(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_ply: cannot open " + path);

  std::string line;
  if (!std::getline(f, line) || line.rfind("ply", 0) != 0)
    throw IoError("read_ply: missing ply magic in " + path);

  long vertex_count = -1;
  std::vector<std::string> props;
  bool in_vertex_element = false;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string kind;
      ss >> kind;
      if (kind != "ascii") throw IoError("read_ply: only ascii format supported: " + path);
    } else if (word == "element") {
      std::string name;
      long count;
      ss >> name >> count;
      in_vertex_element = name == "vertex";
      if (in_vertex_element) vertex_count = count;
    } else if (word == "property" && in_vertex_element) {
      std::string type, name;
      ss >> type >> name;
      props.push_back(name);
    }
  }
  if (vertex_count < 0) throw IoError("read_ply: no vertex element in " + path);

  auto prop_index = [&](const std::string& name) -> long {
    for (size_t i = 0; i < props.size(); ++i)
      if (props[i] == name) return static_cast<long>(i);
    return -1;
  };
  const long ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
  if (ix < 0 || iy < 0 || iz < 0) throw IoError("read_ply: missing x/y/z properties in " + path);
  const long inx = prop_index("nx"), iny = prop_index("ny"), inz = prop_index("nz");
  const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

  CloudData cloud;
  cloud.points.resize(vertex_count, 3);
  if (has_normals) cloud.normals.emplace(vertex_count, 3);

  std::vector<double> row(props.size());
  for (long v = 0; v < vertex_count; ++v) {
    if (!std::getline(f, line)) throw IoError("read_ply: truncated vertex data in " + path);
    std::istringstream ss(line);
    for (auto& value : row)
      if (!(ss >> value)) throw IoError("read_ply: malformed vertex line in " + path);
    cloud.points.row(v) << row[static_cast<size_t>(ix)], row[static_cast<size_t>(iy)],
        row[static_cast<size_t>(iz)];
    if (has_normals)
      cloud.normals->row(v) << row[static_cast<size_t>(inx)], row[static_cast<size_t>(iny)],
          row[static_cast<size_t>(inz)];
  }
  return cloud;
}

void write_ply(const std::string& path, const CloudData& cloud) {
  if (cloud.normals)
    require(cloud.normals->rows() == cloud.points.rows(), "write_ply: normal count mismatch");
  std::ofstream f(path);
  if (!f) throw IoError("write_ply: cannot open " + path);
  f.precision(17);
  f << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.rows() << "\n"
    << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.normals) f << "property double nx\nproperty double ny\nproperty double nz\n";
  f << "end_header\n";
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) {
    f << cloud.points(i, 0) << ' ' << cloud.points(i, 1) << ' ' << cloud.points(i, 2);
    if (cloud.normals)
      f << ' ' << (*cloud.normals)(i, 0) << ' ' << (*cloud.normals)(i, 1) << ' '
        << (*cloud.normals)(i, 2);
    f << '\n';
  }
  if (!f) throw IoError("write_ply: write failed for " + path);
}

PointCloud read_cloud_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_cloud_csv: cannot open " + path);
  std::vector<Eigen::Vector3d> pts;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty() || line == "\r") continue;
    if (first) {
      first = false;
      if (line.rfind("x,", 0) == 0 || line.rfind("x ,", 0) == 0) continue;  // header row
    }
    std::istringstream ss(line);
    Eigen::Vector3d p;
    char comma;
    if (!(ss >> p.x() >> comma >> p.y() >> comma >> p.z()))
      throw IoError("read_cloud_csv: malformed line in " + path);
    pts.push_back(p);
  }
  PointCloud cloud(static_cast<Eigen::Index>(pts.size()), 3);
  for (size_t i = 0; i < pts.size(); ++i) cloud.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return cloud;
}

void write_cloud_csv(const std::string& path, const PointCloud& cloud) {
  std::ofstream f(path);
  if (!f) throw IoError("write_cloud_csv: cannot open " + path);
  f.precision(17);
  f << "x,y,z\n";
  for (Eigen::Index i = 0; i < cloud.rows(); ++i)
    f << cloud(i, 0) << ',' << cloud(i, 1) << ',' << cloud(i, 2) << '\n';
  if (!f) throw IoError("write_cloud_csv: write failed for " + path);
}

CloudData read_cloud(const std::string& path) {
  const std::string ext = lowercase_ext(path);
  if (ext == "ply") return read_ply(path);
  if (ext == "csv") return {read_cloud_csv(path), std::nullopt};
  throw IoError("read_cloud: unsupported extension ." + ext + " for " + path);
}

Eigen::ArrayXXd read_matrix_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_matrix_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("read_matrix_csv: non-numeric cell in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("read_matrix_csv: ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("read_matrix_csv: empty file " + path);
  Eigen::ArrayXXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows.front().size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

DepthFrame depth_frame_from_csv(const std::string& estimate_path, const std::string& truth_path) {
  DepthFrame frame;
  frame.estimate = read_matrix_csv(estimate_path);
  frame.truth = read_matrix_csv(truth_path);
  if (frame.estimate.rows() != frame.truth.rows() || frame.estimate.cols() != frame.truth.cols())
    throw IoError("depth_frame_from_csv: estimate/truth shape mismatch");
  frame.valid = frame.estimate > 0.0 && frame.truth > 0.0 && frame.estimate.isFinite() &&
                frame.truth.isFinite();
  return frame;
}

}  // namespace dualmem
