"""
Coordinate transforms
=====================

GPS (WGS84) -> world pixels at a web-map zoom level -> image pixels ->
site-local meters, and back. Everything a site's georeference needs.
"""

from smartscan import geo

# a facility somewhere in Texas
center = geo.GeoPoint(lat=31.9686, lon=-99.9018)
zoom = geo.ZoomSpec(19)

# forward projection: where does this GPS point land in world pixels?
wp = geo.latlon_to_world_pixel(center, zoom)
print(f"world pixel at zoom 19: ({wp.x:.1f}, {wp.y:.1f})")
print(f"world square side     : {zoom.world_size:.0f} px")

# the inverse is exact to well below 1e-9 degrees
back = geo.world_pixel_to_latlon(wp)
print(f"round trip error      : {abs(back.lat - center.lat):.2e} deg lat, "
      f"{abs(back.lon - center.lon):.2e} deg lon")

# ground resolution shrinks by 2x per zoom level and with latitude
for z in (19, 20, 21):
    mpp = geo.meters_per_pixel(center.lat, geo.ZoomSpec(z))
    print(f"zoom {z}: {mpp:.5f} m/px  ({mpp * 3072:.0f} m site extent)")

# a site frame pins the 3072 px image to the world (origin tile-aligned)
frame = geo.make_site_frame(center, zoom)
bl, tr = frame.bottom_left(), frame.top_right()
print(f"image origin world px : ({frame.origin_world.x:.0f}, {frame.origin_world.y:.0f})")
print(f"bottom-left GPS       : ({bl.lat:.6f}, {bl.lon:.6f})")
print(f"top-right GPS         : ({tr.lat:.6f}, {tr.lon:.6f})")

# image pixels <-> local meters: origin at the center, x east, y north
local = geo.pixel_to_local((2000.0, 1000.0), frame)
print(f"pixel (2000, 1000)    : {local.x_east:+.2f} m east, {local.y_north:+.2f} m north")
print(f"back to pixels        : {geo.local_to_pixel(local, frame)}")
