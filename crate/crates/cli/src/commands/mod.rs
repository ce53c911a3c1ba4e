pub mod encode;
pub mod evaluate;
pub mod pipeline;
pub mod sample;
pub mod simulate;
pub mod train;
pub mod verify;

use clap::{Parser, Subcommand};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "trajdiff", version, about = "Trajectory-conditioned toy video diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scene and optionally render its frames.
    Simulate(simulate::SimulateArgs),
    /// Draw sparse-pose and object-id condition stacks for a scene.
    Encode(encode::EncodeArgs),
    /// Train a model on a directory of scenes.
    Train(train::TrainArgs),
    /// Sample a video from a checkpoint.
    Sample(sample::SampleArgs),
    /// Score detections against ground-truth trajectories.
    Evaluate(evaluate::EvaluateArgs),
    /// Run simulate, encode, train, sample and evaluate end to end.
    Pipeline(pipeline::PipelineArgs),
    /// Check files against their manifests.
    Verify(verify::VerifyArgs),
}

pub fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate::execute(a),
        Command::Encode(a) => encode::execute(a),
        Command::Train(a) => train::execute(a),
        Command::Sample(a) => sample::execute(a).map(drop),
        Command::Evaluate(a) => {
            let report = evaluate::execute(a)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Pipeline(a) => {
            let summary = pipeline::execute(a)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
        Command::Verify(a) => verify::execute(a),
    }
}
