#include "crackfield/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace crackfield {

namespace {

namespace fs = std::filesystem;

struct CurveRow {
  int step;
  double u_mm, load;
};

std::vector<CurveRow> read_curve(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<CurveRow> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("step,", 0) == 0) continue;
    CurveRow row{};
    char comma;
    std::istringstream ls(line);
    double iters, max_phi;
    ls >> row.step >> comma >> row.u_mm >> comma >> row.load >> comma >> iters >>
        comma >> max_phi;
    if (ls) rows.push_back(row);
  }
  return rows;
}

Eigen::VectorXd read_field(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string tok, name;
  int n = 0, step = 0;
  is >> tok >> name >> tok >> n >> tok >> step;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) is >> v[i];
  if (!is) throw std::runtime_error("truncated field file " + path.string());
  return v;
}

std::optional<fs::path> last_snapshot(const fs::path& dir, const std::string& prefix) {
  int best = -1;
  fs::path best_path;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) != 0 || entry.path().extension() != ".field") continue;
    const int step = std::atoi(name.c_str() + prefix.size());
    if (step > best) {
      best = step;
      best_path = entry.path();
    }
  }
  if (best < 0) return std::nullopt;
  return best_path;
}

}  // namespace

RunMetrics extract_metrics(const fs::path& run_dir) {
  RunMetrics m;

  const auto rows = read_curve(run_dir / "curve.csv");
  if (rows.empty()) throw std::runtime_error("empty load-displacement curve");
  size_t peak_idx = 0;
  for (size_t i = 1; i < rows.size(); ++i)
    if (rows[i].load > rows[peak_idx].load) peak_idx = i;
  if (peak_idx + 1 < rows.size()) {
    m.peak_load = rows[peak_idx].load;
    m.displacement_at_peak = 1e-3 * rows[peak_idx].u_mm;
  }

  // Band width from the final phase snapshot: area of the phi > 0.5 region
  // divided by its extent along the band direction.
  const auto snap = last_snapshot(run_dir, "phi_");
  std::ifstream meta_is(run_dir / "run.json");
  if (snap && meta_is) {
    const nlohmann::json meta = nlohmann::json::parse(meta_is);
    const double l0 = meta["material"]["l0_m"].get<double>();
    std::ifstream mesh_is(run_dir / "mesh.txt");
    const Mesh mesh = read_mesh(mesh_is);
    const Eigen::VectorXd phi = read_field(*snap);
    if (phi.size() != mesh.num_nodes())
      throw std::runtime_error("snapshot does not match mesh");

    // Lumped nodal areas.
    Eigen::VectorXd lumped = Eigen::VectorXd::Zero(mesh.num_nodes());
    const double share = 1.0 / mesh.nodes_per_elem();
    for (int e = 0; e < mesh.num_elems(); ++e)
      for (int v : mesh.elem(e)) lumped[v] += share * mesh.elem_area(e);

    std::vector<int> band;
    for (int i = 0; i < mesh.num_nodes(); ++i)
      if (phi[i] > 0.5) band.push_back(i);
    if (band.size() >= 8) {
      Eigen::Vector2d mean = Eigen::Vector2d::Zero();
      for (int i : band) mean += mesh.nodes[i];
      mean /= static_cast<double>(band.size());
      Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
      for (int i : band) {
        const Eigen::Vector2d d = mesh.nodes[i] - mean;
        cov += d * d.transpose();
      }
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
      const Eigen::Vector2d axis = eig.eigenvectors().col(1);  // dominant
      double lo = 0.0, hi = 0.0, area = 0.0;
      for (int i : band) {
        const double t = axis.dot(mesh.nodes[i] - mean);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
        area += lumped[i];
      }
      const double length = hi - lo;
      if (length > 0.0) m.band_width_l0 = area / length / l0;
    }
  }
  return m;
}

}  // namespace crackfield
