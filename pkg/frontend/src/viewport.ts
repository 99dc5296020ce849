/**
 * Zoom/pan transform between screen and image pixels. The 3072 px raster is
 * drawn once and re-rendered under this transform; map tiles are never
 * re-fetched. Points must land on the exact image pixel the user clicked,
 * whatever the current zoom, so both directions are kept exact inverses.
 */

export class Viewport {
  scale = 1;
  offsetX = 0;
  offsetY = 0;

  constructor(
    public screenWidth: number,
    public screenHeight: number,
  ) {}

  screenToImage(sx: number, sy: number): [number, number] {
    return [(sx - this.offsetX) / this.scale, (sy - this.offsetY) / this.scale];
  }

  imageToScreen(ix: number, iy: number): [number, number] {
    return [ix * this.scale + this.offsetX, iy * this.scale + this.offsetY];
  }

  pan(dx: number, dy: number): void {
    this.offsetX += dx;
    this.offsetY += dy;
  }

  /** Zoom by a factor keeping the screen point (sx, sy) anchored. */
  zoomAt(sx: number, sy: number, factor: number): void {
    const [ix, iy] = this.screenToImage(sx, sy);
    this.scale *= factor;
    this.offsetX = sx - ix * this.scale;
    this.offsetY = sy - iy * this.scale;
  }

  fit(imageSize: number): void {
    this.scale = Math.min(this.screenWidth, this.screenHeight) / imageSize;
    this.offsetX = (this.screenWidth - imageSize * this.scale) / 2;
    this.offsetY = (this.screenHeight - imageSize * this.scale) / 2;
  }
}
