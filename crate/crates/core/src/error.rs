use thiserror::Error;

use crate::dbn::DbnError;
use crate::dec::DecError;
use crate::featurize::FeaturizeError;
use crate::genio::GenioError;
use crate::kmeans::KMeansError;
use crate::metrics::MetricsError;
use crate::mlp::ClassifierError;
use crate::nn::NnError;
use crate::rbm::RbmError;
use crate::store::StoreError;
use crate::synthgen::SynthError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure classes, mapped one-to-one onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Parse,
    Config,
    Data,
    Numeric,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 1,
            ErrorCategory::Parse | ErrorCategory::Data => 2,
            ErrorCategory::Numeric => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::Parse => "ParseError",
            ErrorCategory::Config => "ConfigError",
            ErrorCategory::Data => "DataError",
            ErrorCategory::Numeric => "NumericError",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Genio(#[from] GenioError),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Rbm(#[from] RbmError),
    #[error(transparent)]
    Dbn(#[from] DbnError),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
    #[error(transparent)]
    Dec(#[from] DecError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Genio(e) | Error::Featurize(FeaturizeError::Genio(e)) => genio_category(e),
            Error::Io(_) => ErrorCategory::Data,
            Error::Featurize(FeaturizeError::InvalidSplit(_)) => ErrorCategory::Config,
            Error::Featurize(_) => ErrorCategory::Data,
            Error::Nn(NnError::InvalidConfig(_)) => ErrorCategory::Config,
            Error::Nn(_) => ErrorCategory::Numeric,
            Error::Classifier(ClassifierError::InvalidConfig(_))
            | Error::Classifier(ClassifierError::EmptyGrid) => ErrorCategory::Config,
            Error::Classifier(ClassifierError::Nn(_)) => ErrorCategory::Numeric,
            Error::Classifier(_) => ErrorCategory::Data,
            Error::Rbm(RbmError::ValueOutOfRange) => ErrorCategory::Data,
            Error::Rbm(_) => ErrorCategory::Numeric,
            Error::Dbn(DbnError::Classifier(ClassifierError::InvalidConfig(_))) => ErrorCategory::Config,
            Error::Dbn(DbnError::Nn(NnError::InvalidConfig(_))) => ErrorCategory::Config,
            Error::Dbn(DbnError::Nn(_)) => ErrorCategory::Numeric,
            Error::Dbn(_) => ErrorCategory::Data,
            Error::KMeans(KMeansError::KTooLarge { .. }) | Error::KMeans(KMeansError::InvalidConfig(_)) => {
                ErrorCategory::Config
            }
            Error::KMeans(_) => ErrorCategory::Data,
            Error::Dec(DecError::InvalidConfig(_))
            | Error::Dec(DecError::KTooLarge { .. })
            | Error::Dec(DecError::Nn(NnError::InvalidConfig(_))) => ErrorCategory::Config,
            Error::Dec(DecError::Nn(_)) | Error::Dec(DecError::DegenerateCluster(_)) => {
                ErrorCategory::Numeric
            }
            Error::Dec(_) => ErrorCategory::Data,
            Error::Metrics(_) => ErrorCategory::Data,
            Error::Store(_) => ErrorCategory::Data,
            Error::Synth(_) => ErrorCategory::Config,
            Error::Config(_) => ErrorCategory::Config,
        }
    }
}

fn genio_category(e: &GenioError) -> ErrorCategory {
    match e {
        GenioError::Io(_) => ErrorCategory::Data,
        _ => ErrorCategory::Parse,
    }
}
