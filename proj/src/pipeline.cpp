#include "clcoach/pipeline.hpp"

#include <algorithm>

#include "clcoach/error.hpp"

namespace clcoach {

LinearAnnotator::LinearAnnotator(ExpressionModel model, AffectPoint bias) : model_(std::move(model)), bias_(bias) {}

AffectPoint LinearAnnotator::annotate(const FeatureVector& frame) const {
    const auto z = model_.decode(frame);
    return AffectPoint::clamped(z(0) + bias_.valence(), z(1) + bias_.arousal());
}

void ResponseBuffer::open() {
    discard();
    open_ = true;
}

void ResponseBuffer::discard() {
    frames_.clear();
    window_.clear();
    open_ = false;
}

void ResponseBuffer::append(BufferedFrame frame) {
    if (!open_) throw ProtocolError("no response is open");
    window_.push(frame.time, frame.annotation);
    frames_.push_back(std::move(frame));
}

AffectPoint ingest_frame(ResponseBuffer& buf, Timestamp t, const FeatureVector& frame, const Annotator& annotator) {
    if (!buf.is_open()) throw ProtocolError("no response is open");
    AffectPoint a;
    try {
        a = annotator.annotate(frame);
    } catch (const std::exception& e) {
        throw AnnotatorFault(std::string("annotator failed: ") + e.what());
    }
    return ingest_annotated(buf, t, frame, a);
}

AffectPoint ingest_annotated(ResponseBuffer& buf, Timestamp t, const FeatureVector& frame, const AffectPoint& annotation) {
    buf.append({frame, annotation, t});
    return annotation;
}

ResponseOutcome close_response(ResponseBuffer& buf, Condition condition, GdmPersonalModel* model,
                               const PersonalisationSetup& setup, std::uint64_t rng_seed) {
    if (!buf.is_open()) throw ProtocolError("no response is open");
    if (buf.size() == 0) throw EmptyInputError("response has no frames");
    const bool personal = condition == Condition::C3;
    if (personal && model == nullptr) throw ParameterError("C3 needs a personal model");
    if (!personal && model != nullptr) throw ParameterError("a personal model is only used under C3");
    if (personal && setup.generator == nullptr) throw ParameterError("C3 needs an imagination generator");

    ResponseOutcome out;
    out.frames = buf.size();
    out.annotator_summary = summarize_window(buf.window());
    out.summary = out.annotator_summary;

    if (personal) {
        std::vector<LabelledSample> frames;
        frames.reserve(buf.size());
        for (const auto& f : buf.frames()) frames.push_back({f.features, f.annotation});
        const auto originals = sample_frames(frames, setup.sampled_frames, rng_seed);
        const auto batch = augment(originals, *setup.generator, setup.grid, setup.exec);
        out.learn = model->learn_response(batch);

        const auto& all = buf.frames();
        const std::size_t first = all.size() > kWindowFrames ? all.size() - kWindowFrames : 0;
        std::vector<AffectPoint> predictions;
        predictions.reserve(all.size() - first);
        for (std::size_t i = first; i < all.size(); ++i) predictions.push_back(model->predict_affect(all[i].features));
        out.summary = mean_affect(predictions);
    }
    buf.discard();
    return out;
}

}  // namespace clcoach
