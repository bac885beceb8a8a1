import type { JobResponse } from "./types";

export const POLL_INTERVAL_MS = 1000;

type Fetcher = (jobId: string) => Promise<JobResponse>;
type Scheduler = (fn: () => void, ms: number) => unknown;

/** Poll a job until it reaches a terminal state; resolves on success,
 * rejects with the job error on failure. */
export function pollJob(
  jobId: string,
  fetcher: Fetcher,
  onTick?: (job: JobResponse) => void,
  schedule: Scheduler = (fn, ms) => setTimeout(fn, ms),
): Promise<JobResponse> {
  return new Promise((resolve, reject) => {
    const tick = async () => {
      let job: JobResponse;
      try {
        job = await fetcher(jobId);
      } catch (err) {
        reject(err);
        return;
      }
      onTick?.(job);
      if (job.status === "succeeded") {
        resolve(job);
      } else if (job.status === "failed") {
        reject(new Error(job.error ?? "job failed"));
      } else {
        schedule(tick, POLL_INTERVAL_MS);
      }
    };
    tick();
  });
}
