#pragma once
// Perception-to-dialogue glue. Frames of a descriptive answer are annotated
// and buffered; at the end of the answer the condition decides where the
// affect summary comes from:
//   C1, C2  mean of the generic annotator over the last 150 frames
//           (C1 only logs it),
//   C3      the personal model is trained on 10 sampled frames plus their
//           imagined variants, then its predictions over the last 150
//           frames are averaged.

#include <cstdint>
#include <optional>
#include <vector>

#include "clcoach/affect.hpp"
#include "clcoach/dialogue.hpp"
#include "clcoach/expression.hpp"
#include "clcoach/gdm.hpp"
#include "clcoach/imagination.hpp"

namespace clcoach {

// Generic (non-personalised) frame annotator.
class Annotator {
public:
    virtual ~Annotator() = default;
    virtual AffectPoint annotate(const FeatureVector& frame) const = 0;
};

// Read-out of the canonical expression model, plus an optional global bias,
// clamped to the unit square.
class LinearAnnotator final : public Annotator {
public:
    explicit LinearAnnotator(ExpressionModel model = ExpressionModel::canonical(), AffectPoint bias = {});
    AffectPoint annotate(const FeatureVector& frame) const override;

    const ExpressionModel& model() const noexcept { return model_; }

private:
    ExpressionModel model_;
    AffectPoint bias_;
};

struct BufferedFrame {
    FeatureVector features;
    AffectPoint annotation;
    Timestamp time = 0;
};

class ResponseBuffer {
public:
    // Starts a new response, discarding anything buffered.
    void open();
    bool is_open() const noexcept { return open_; }
    void discard();

    void append(BufferedFrame frame);

    const std::vector<BufferedFrame>& frames() const noexcept { return frames_; }
    const AffectWindow& window() const noexcept { return window_; }
    std::size_t size() const noexcept { return frames_.size(); }

private:
    bool open_ = false;
    std::vector<BufferedFrame> frames_;
    AffectWindow window_;
};

// Annotates and buffers one frame, returning the annotation for display.
// Throws ProtocolError when no response is open and AnnotatorFault when the
// annotator misbehaves.
AffectPoint ingest_frame(ResponseBuffer& buf, Timestamp t, const FeatureVector& frame, const Annotator& annotator);

// Buffers a frame whose annotation is already known (live affect pad).
AffectPoint ingest_annotated(ResponseBuffer& buf, Timestamp t, const FeatureVector& frame, const AffectPoint& annotation);

struct ResponseOutcome {
    AffectPoint summary;            // what the dialogue sees
    AffectPoint annotator_summary;  // window mean of annotations, always computed
    std::size_t frames = 0;
    std::optional<LearnReport> learn;  // C3 only
};

struct PersonalisationSetup {
    const Generator* generator = nullptr;
    GridSpec grid;
    std::size_t sampled_frames = kSampledFrames;
    Exec exec = Exec::Auto;
};

// Closes the open response. `model` must be non-null exactly under C3.
ResponseOutcome close_response(ResponseBuffer& buf, Condition condition, GdmPersonalModel* model,
                               const PersonalisationSetup& setup, std::uint64_t rng_seed);

}  // namespace clcoach
