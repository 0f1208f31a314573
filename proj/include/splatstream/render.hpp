#pragma once

#include "splatstream/field.hpp"
#include "splatstream/lod.hpp"
#include "splatstream/project.hpp"
#include "splatstream/raster.hpp"
#include "splatstream/scene.hpp"
#include "splatstream/tvis.hpp"

#include <optional>
#include <string>

namespace splatstream {

enum class PipelineMode { conventional, streamlined };

const char* mode_name(PipelineMode mode);
PipelineMode mode_from_name(const std::string& name);

struct RenderConfig {
    ProjectionConfig projection;
    /// Screen margin for frustum culling, px; negative selects default_margin().
    double margin = -1.0;
    LodConfig lod;
    BlendConfig blend;
    /// Color fields for Gaussians carrying the field marker; those render mid-gray without one.
    const NeuralFields* fields = nullptr;
    /// Streamlined mode records point life from each render.
    bool update_life = true;
    /// Feed tvis with the contribution mask instead of the frustum mask.
    bool life_from_contribution = false;
    int reset_period = 30;
    std::size_t temporal_buckets = 256;
};

struct StageTimes {
    double filter_ms = 0.0;
    double transform_ms = 0.0;
    double project_ms = 0.0;
    double lod_ms = 0.0;
    double color_ms = 0.0;
    double blend_ms = 0.0;
    double total_ms = 0.0;
};

struct RenderStats {
    /// Gaussians that survived the temporal filter (all active ones in conventional mode).
    std::size_t candidates = 0;
    std::size_t projected = 0;
    std::size_t frustum_passed = 0;
    std::size_t lod_culled = 0;
    std::size_t blended = 0;
    std::size_t singular = 0;
    StageTimes time;
};

struct RenderOutput {
    Image image;
    std::optional<DepthMap> depth_map;
    /// Both masks are aligned with SceneModel::table() order.
    Mask frustum_mask;
    Mask contributed_mask;
    RenderStats stats;
};

/// Renders one scene in either pipeline mode and owns the streamlined mode's temporal state.
/// The scene must outlive the renderer and keep its Gaussian containers unchanged.
class Renderer {
public:
    explicit Renderer(SceneModel& scene, RenderConfig config = {});

    RenderOutput render(double t, PipelineMode mode);
    RenderOutput render(const Camera& camera, PipelineMode mode);

    /// Renders every training timestep in streamlined mode, then commits visibility.
    void sweep();

    /// Life -> visibility commit (with the periodic reset), then index rebuild.
    bool commit_visibility();
    void reset_visibility();
    /// Rebuild the temporal index after visibility was edited outside the renderer.
    void refresh_index();

    const GaussianTable& table() const { return table_; }
    const TemporalIndex& temporal_index() const { return index_; }
    RenderConfig& config() { return config_; }

private:
    RenderOutput render_conventional(const Camera& camera);
    RenderOutput render_streamlined(const Camera& camera);

    SceneModel& scene_;
    RenderConfig config_;
    GaussianTable table_;
    /// Instance id per table entry, -1 for static.
    std::vector<int> instance_of_;
    TemporalIndex index_;
    VisibilitySchedule schedule_;
};

/// One-shot render; builds a Renderer per call.
RenderOutput render_view(SceneModel& scene, double t, PipelineMode mode, const RenderConfig& config = {});

}  // namespace splatstream
