#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include "aesthete/assessor.hpp"

namespace aesthete {

struct OnnxAssessor::Impl {
  cv::dnn::Net net;
};

namespace {

cv::Mat to_blob(const ImageBuffer& img, const ModelNormalization& norm) {
  const int sizes[4] = {1, 3, img.height(), img.width()};
  cv::Mat blob(4, sizes, CV_32F);
  auto* dst = blob.ptr<float>();
  const std::size_t plane = img.pixel_count();
  for (std::size_t i = 0; i < plane; ++i) {
    const float* p = img.pixel(i);
    for (int c = 0; c < 3; ++c) {
      dst[c * plane + i] = static_cast<float>((p[c] - norm.mean[c]) / norm.stddev[c]);
    }
  }
  return blob;
}

}  // namespace

OnnxAssessor::OnnxAssessor(std::filesystem::path model, ModelNormalization normalization)
    : path_(std::move(model)), normalization_(normalization), impl_(std::make_unique<Impl>()) {
  for (double s : normalization_.stddev) {
    if (!(s > 0.0)) throw Error(ErrorKind::AssessorLoad, "assessor load failure: normalisation std must be > 0");
  }
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path_, ec)) {
    throw Error(ErrorKind::AssessorLoad, "assessor load failure: cannot read " + path_.string());
  }
  try {
    impl_->net = cv::dnn::readNetFromONNX(path_.string());
    if (impl_->net.empty()) throw Error(ErrorKind::AssessorLoad, "assessor load failure: empty network");
    impl_->net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    impl_->net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
    // Probe the signature once so a wrong model fails here, not mid-run.
    logits(ImageBuffer(kAssessmentSize, kAssessmentSize, 0.5f));
  } catch (const cv::Exception& e) {
    throw Error(ErrorKind::AssessorLoad, std::string("assessor load failure: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::AssessorLoad) throw;
    throw Error(ErrorKind::AssessorLoad, std::string("assessor load failure: ") + e.what());
  }
}

OnnxAssessor::~OnnxAssessor() = default;

std::string OnnxAssessor::name() const { return "model:" + path_.string(); }

std::array<double, kBucketCount> OnnxAssessor::logits(const ImageBuffer& img) {
  const ImageBuffer input = (img.width() == kAssessmentSize && img.height() == kAssessmentSize)
                                ? img
                                : resize(img, kAssessmentSize, kAssessmentSize);
  cv::Mat out;
  try {
    impl_->net.setInput(to_blob(input, normalization_));
    out = impl_->net.forward();
  } catch (const cv::Exception& e) {
    throw Error(ErrorKind::AssessorLoad, std::string("assessor inference failure: ") + e.what());
  }
  if (out.total() != kBucketCount) {
    throw Error(ErrorKind::AssessorLoad, "assessor load failure: model must output 10 logits, got " +
                                             std::to_string(out.total()));
  }
  cv::Mat flat;
  out.reshape(1, 1).convertTo(flat, CV_64F);
  std::array<double, kBucketCount> result{};
  for (std::size_t j = 0; j < kBucketCount; ++j) result[j] = flat.at<double>(0, static_cast<int>(j));
  return result;
}

ScoreDistribution OnnxAssessor::assess(const ImageBuffer& img) { return softmax(logits(img)); }

std::unique_ptr<Assessor> OnnxAssessor::clone() const {
  return std::make_unique<OnnxAssessor>(path_, normalization_);
}

}  // namespace aesthete
